import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // the walkthrough boots a real server and plays ~70 requests
    hookTimeout: 120_000,
    testTimeout: 30_000,
  },
});
