import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
    target: "es2022",
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // roundtrip.test.ts boots the real Python service; give it room
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
