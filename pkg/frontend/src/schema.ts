/** Minimal JSON-Schema checker covering the subset the serve protocol
 * uses: object/number/string/boolean types, const, enum, required,
 * properties, additionalProperties:false, oneOf, exclusiveMinimum and
 * local $ref. Enough to prove outbound messages match the shared schema.
 */

export interface SchemaDoc {
  definitions: Record<string, unknown>;
}

type Node = Record<string, unknown>;

function resolveRef(doc: SchemaDoc, ref: string): Node {
  const prefix = "#/definitions/";
  if (!ref.startsWith(prefix)) throw new Error(`unsupported $ref: ${ref}`);
  const node = doc.definitions[ref.slice(prefix.length)];
  if (!node) throw new Error(`missing definition: ${ref}`);
  return node as Node;
}

function typeMatches(expected: string, value: unknown): boolean {
  switch (expected) {
    case "object":
      return typeof value === "object" && value !== null && !Array.isArray(value);
    case "number":
      return typeof value === "number" && Number.isFinite(value);
    case "string":
      return typeof value === "string";
    case "boolean":
      return typeof value === "boolean";
    case "null":
      return value === null;
    default:
      throw new Error(`unsupported type keyword: ${expected}`);
  }
}

export function matches(doc: SchemaDoc, node: Node, value: unknown): boolean {
  if (typeof node.$ref === "string") {
    return matches(doc, resolveRef(doc, node.$ref), value);
  }
  if (Array.isArray(node.oneOf)) {
    return node.oneOf.filter((alt) => matches(doc, alt as Node, value)).length === 1;
  }
  if ("const" in node && value !== node.const) return false;
  if (Array.isArray(node.enum) && !node.enum.includes(value)) return false;
  if (node.type !== undefined) {
    const kinds = Array.isArray(node.type) ? node.type : [node.type];
    if (!kinds.some((k) => typeMatches(k as string, value))) return false;
  }
  if (typeof node.exclusiveMinimum === "number") {
    if (typeof value !== "number" || value <= node.exclusiveMinimum) return false;
  }
  if (node.type === "object" || node.properties || node.required) {
    if (typeof value !== "object" || value === null) return false;
    const obj = value as Record<string, unknown>;
    const props = (node.properties ?? {}) as Record<string, Node>;
    for (const key of (node.required ?? []) as string[]) {
      if (!(key in obj)) return false;
    }
    for (const [key, sub] of Object.entries(props)) {
      if (key in obj && !matches(doc, sub, obj[key])) return false;
    }
    if (node.additionalProperties === false) {
      for (const key of Object.keys(obj)) {
        if (!(key in props)) return false;
      }
    }
  }
  return true;
}

export function validateAgainst(doc: SchemaDoc, definition: string, value: unknown): boolean {
  return matches(doc, resolveRef(doc, `#/definitions/${definition}`), value);
}
