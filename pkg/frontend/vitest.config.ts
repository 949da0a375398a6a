import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the console is served by the service itself, so tests run same-origin
    environmentOptions: { happyDOM: { url: "http://127.0.0.1:8791" } },
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
