import { ApiClient } from "./api";
import { initApp } from "./app";
import { renderWithMermaid } from "./render";
import "./style.css";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}

initApp(root, {
  client: new ApiClient((input, init) => fetch(input, init)),
  renderMermaid: renderWithMermaid,
});
