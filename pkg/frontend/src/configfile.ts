/** Serialize a config map back to the engine's flat `key = value` file form. */
export function formatConfigFile(values: Record<string, unknown>): string {
  const lines: string[] = [];
  for (const [key, value] of Object.entries(values)) {
    lines.push(`${key} = ${formatValue(value)}`);
  }
  return lines.join("\n") + "\n";
}

function formatValue(value: unknown): string {
  if (value === null) return "none";
  if (typeof value === "boolean") return value ? "true" : "false";
  // JSON erases the int/float distinction (40.0 arrives as 40); the engine
  // coerces by field type when it reads the file back, so plain formatting
  // round-trips.
  return String(value);
}
