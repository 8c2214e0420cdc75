/** Token-level diff between the submitted text and the suggested rewrite.
 *
 * Minimal edit script via Levenshtein alignment; the backtrace prefers
 * diagonal moves, so an adjacent word swap renders as two substitutions
 * (both swapped tokens highlighted) rather than a delete plus an insert
 * elsewhere.
 */

export type OpKind = "equal" | "insert" | "delete" | "substitute";

export interface DiffOp {
  kind: OpKind;
  a: string[]; // tokens consumed from the original
  b: string[]; // tokens produced in the rewrite
}

/** Word/punctuation tokenizer, consistent with how the server counts tokens. */
export function tokenize(text: string): string[] {
  const out = text.match(/[\p{L}\p{N}']+|[^\s\p{L}\p{N}']/gu);
  return out === null ? [] : out;
}

/** Minimal edit script turning token list a into b, adjacent ops merged. */
export function diffTokens(a: string[], b: string[]): DiffOp[] {
  const n = a.length;
  const m = b.length;
  const dist: number[][] = [];
  for (let i = 0; i <= n; i++) {
    dist.push(new Array<number>(m + 1).fill(0));
    dist[i][0] = i;
  }
  for (let j = 0; j <= m; j++) dist[0][j] = j;
  for (let i = 1; i <= n; i++) {
    for (let j = 1; j <= m; j++) {
      const subCost = a[i - 1] === b[j - 1] ? 0 : 1;
      dist[i][j] = Math.min(
        dist[i - 1][j - 1] + subCost,
        dist[i - 1][j] + 1,
        dist[i][j - 1] + 1,
      );
    }
  }
  // backtrace, diagonal first
  const ops: DiffOp[] = [];
  let i = n;
  let j = m;
  const push = (kind: OpKind, at: string[], bt: string[]) => {
    const last = ops[ops.length - 1];
    if (last !== undefined && last.kind === kind) {
      last.a.unshift(...at);
      last.b.unshift(...bt);
    } else {
      ops.push({ kind, a: at, b: bt });
    }
  };
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && dist[i][j] === dist[i - 1][j - 1] + (a[i - 1] === b[j - 1] ? 0 : 1)) {
      push(a[i - 1] === b[j - 1] ? "equal" : "substitute", [a[i - 1]], [b[j - 1]]);
      i--;
      j--;
    } else if (i > 0 && dist[i][j] === dist[i - 1][j] + 1) {
      push("delete", [a[i - 1]], []);
      i--;
    } else {
      push("insert", [], [b[j - 1]]);
      j--;
    }
  }
  return ops.reverse();
}

/** Tokens of the rewrite that the diff marks as changed (inserted or substituted). */
export function highlightedTokens(ops: DiffOp[]): string[] {
  const out: string[] = [];
  for (const op of ops) {
    if (op.kind === "insert" || op.kind === "substitute") out.push(...op.b);
  }
  return out;
}

function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Inline HTML: deletions struck through, insertions emphasized,
 * substitutions shown as old→new. */
export function renderDiff(a: string[], b: string[]): string {
  const parts: string[] = [];
  for (const op of diffTokens(a, b)) {
    const at = escapeHtml(op.a.join(" "));
    const bt = escapeHtml(op.b.join(" "));
    if (op.kind === "equal") {
      parts.push(`<span>${at}</span>`);
    } else if (op.kind === "delete") {
      parts.push(`<del>${at}</del>`);
    } else if (op.kind === "insert") {
      parts.push(`<ins>${bt}</ins>`);
    } else {
      parts.push(`<del>${at}</del> <ins>${bt}</ins>`);
    }
  }
  return parts.join(" ");
}
