import { defineConfig } from "vitest/config";

// The dev server proxies API calls to a locally running service
// (`trajtransfer serve --dataset <dir> --port 8321`).
export default defineConfig({
  server: {
    proxy: {
      "/tasks": "http://127.0.0.1:8321",
      "/interpolate": "http://127.0.0.1:8321",
      "/health": "http://127.0.0.1:8321",
    },
  },
  test: {
    environment: "node",
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
