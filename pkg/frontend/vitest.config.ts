import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        // the acceptance tests talk to a live localhost server on a
        // dynamic port, which same-origin policy would otherwise block
        settings: { fetch: { disableSameOriginPolicy: true } },
      },
    },
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
