import { describe, expect, it } from "vitest";
import { gradeForKey } from "../src/keys";

describe("gradeForKey", () => {
  it("maps Enter to normal (grade 0)", () => {
    expect(gradeForKey("Enter")).toBe(0);
  });

  it("maps 1-4 to grades 1-4", () => {
    expect(gradeForKey("1")).toBe(1);
    expect(gradeForKey("2")).toBe(2);
    expect(gradeForKey("3")).toBe(3);
    expect(gradeForKey("4")).toBe(4);
  });

  it("ignores everything else", () => {
    for (const key of ["0", "5", "a", " ", "Escape", "ArrowUp", "enter"]) {
      expect(gradeForKey(key)).toBeNull();
    }
  });
});
