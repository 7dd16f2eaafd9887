// Tiny DOM helpers; no framework, elements built directly like the rest of
// the studio.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

export function clear(node: HTMLElement): HTMLElement {
  while (node.firstChild) node.removeChild(node.firstChild);
  return node;
}

export function svgContainer(svgText: string, className = "render"): HTMLElement {
  const box = el("div", { class: className });
  box.innerHTML = svgText;
  return box;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  timers: { set: typeof setTimeout; clear: typeof clearTimeout } = {
    set: setTimeout,
    clear: clearTimeout,
  },
): (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (handle !== undefined) timers.clear(handle);
    handle = timers.set(() => fn(...args), waitMs);
  };
}

export function banner(parent: HTMLElement, message: string): void {
  const note = el("div", { class: "banner" }, message);
  parent.prepend(note);
  setTimeout(() => note.remove(), 4000);
}
