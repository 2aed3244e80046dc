// Renders mermaid markup to an SVG string. The element id must be
// unique per call; mermaid uses it for internal DOM bookkeeping.
export type MermaidRenderer = (markup: string, elementId: string) => Promise<string>;

let initialized = false;

// Dynamic import keeps mermaid out of the entry chunk; the first render
// pays the load cost, later ones reuse the module.
export const renderWithMermaid: MermaidRenderer = async (markup, elementId) => {
  const mermaid = (await import("mermaid")).default;
  if (!initialized) {
    mermaid.initialize({ startOnLoad: false, securityLevel: "strict", theme: "neutral" });
    initialized = true;
  }
  const { svg } = await mermaid.render(elementId, markup);
  return svg;
};
