import { defineConfig } from "vitest/config";

export default defineConfig({
  // relative asset paths so the bundle works under `codediagram serve --static`
  base: "./",
  build: {
    outDir: "dist",
  },
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
  },
});
