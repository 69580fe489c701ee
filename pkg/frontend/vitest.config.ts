import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    globalSetup: "./tests/global_setup.ts",
    include: ["tests/**/*.test.ts"],
    testTimeout: 20000,
    hookTimeout: 60000,
    // tests share one seeded server; keep files sequential so vote
    // sequences don't interleave
    fileParallelism: false,
  },
});
