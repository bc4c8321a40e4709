/** Decision-key mapping: number keys 1-4 give those grades, Enter is normal. */
export function gradeForKey(key: string): number | null {
  if (key === "Enter") return 0;
  if (key === "1" || key === "2" || key === "3" || key === "4") {
    return Number(key);
  }
  return null;
}
