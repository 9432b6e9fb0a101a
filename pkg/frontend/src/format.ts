/** Display helpers shared by panels. */

/** Render a 0..1 accuracy as a percent with two decimals, e.g. "89.24%". */
export function formatAccuracy(accuracy: number | null | undefined): string {
  if (accuracy === null || accuracy === undefined) return "—";
  return `${(accuracy * 100).toFixed(2)}%`;
}

/** Keyboard shortcut shown on the i-th class button: 1..9 then 0. */
export function shortcutForIndex(index: number): string | null {
  if (index < 0 || index > 9) return null;
  return index === 9 ? "0" : String(index + 1);
}

/** Inverse of shortcutForIndex: which button does this key press mean? */
export function indexForKey(key: string): number | null {
  if (!/^[0-9]$/.test(key)) return null;
  return key === "0" ? 9 : Number(key) - 1;
}
