"""Evaluation metrics: corpus BLEU, GLEU for error correction, and the
MaxMatch (M2) scorer with its edit-extraction lattice.

All scorers are pure functions over token lists. The M2 candidate space
is defined explicitly: an edit set is any decomposition of the
src -> hyp transformation into disjoint span edits, where a single edit
may absorb at most `merge_cap` matching tokens (the transitive-merge
limit). The DP scorer and the brute-force oracle in the tests both
implement this same contract.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Edit:
    start: int
    end: int
    replacement: tuple
    type: str = "UNK"
    annotator: int = 0

    def key(self):
        return (self.start, self.end, self.replacement)


@dataclass
class EditSet:
    edits: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.edits)

    def __len__(self):
        return len(self.edits)


@dataclass
class MetricReport:
    metric: str
    value: float
    precision: float = None
    recall: float = None
    per_sentence: list = None


def apply_edits(tokens, edits):
    """Apply span edits to a token list (edits must be non-overlapping)."""
    out = list(tokens)
    for e in sorted(edits, key=lambda e: (e.start, e.end), reverse=True):
        out[e.start : e.end] = list(e.replacement)
    return out


# -- BLEU ---------------------------------------------------------------

def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hyps, refs, max_n=4):
    """Corpus BLEU: clipped n-gram precision, geometric mean, brevity penalty, x100."""
    if len(hyps) != len(refs):
        raise ValueError(f"hypothesis count {len(hyps)} != reference count {len(refs)}")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hgrams = _ngrams(hyp, n)
            rgrams = _ngrams(ref, n)
            matches[n - 1] += sum(min(c, rgrams[g]) for g, c in hgrams.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    if hyp_len == 0 or any(m == 0 for m in matches):
        return MetricReport("BLEU", 0.0)
    log_prec = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return MetricReport("BLEU", 100.0 * bp * math.exp(log_prec))


def sentence_bleu(hyp, ref, max_n=4):
    """Sentence BLEU with add-one smoothing on n >= 2."""
    if not hyp:
        return 0.0
    log_prec = 0.0
    used = 0
    for n in range(1, max_n + 1):
        total = max(len(hyp) - n + 1, 0)
        if total == 0 and max(len(ref) - n + 1, 0) == 0:
            continue
        hgrams = _ngrams(hyp, n)
        rgrams = _ngrams(ref, n)
        m = sum(min(c, rgrams[g]) for g, c in hgrams.items())
        if n >= 2:
            m += 1
            total += 1
        if m == 0 or total == 0:
            return 0.0
        log_prec += math.log(m / total)
        used += 1
    if used == 0:
        return 0.0
    bp = 1.0 if len(hyp) > len(ref) else math.exp(1.0 - len(ref) / max(len(hyp), 1))
    return 100.0 * bp * math.exp(log_prec / used)


# -- GLEU ---------------------------------------------------------------

def sentence_gleu(src, hyp, refs, max_n=4):
    """GLEU for one sentence: reference matches minus source-only matches.

    For each n, the numerator is (hyp n-grams matching the reference)
    minus (hyp n-grams present in the source but absent from the
    reference), floored at 0. Multiple references are averaged.
    """
    if not refs or any(len(r) == 0 for r in refs):
        raise ValueError("GLEU needs at least one non-empty reference")
    scores = []
    for ref in refs:
        log_prec = 0.0
        used = 0
        zero = False
        for n in range(1, max_n + 1):
            hgrams = _ngrams(hyp, n)
            rgrams = _ngrams(ref, n)
            sgrams = _ngrams(src, n)
            total = max(len(hyp) - n + 1, 0)
            if total == 0 and max(len(ref) - n + 1, 0) == 0:
                continue
            matched = sum(min(c, rgrams[g]) for g, c in hgrams.items())
            src_only = sum(
                min(c, sgrams[g]) for g, c in hgrams.items()
                if sgrams[g] > 0 and rgrams[g] == 0
            )
            num = max(matched - src_only, 0)
            if num == 0 or total == 0:
                zero = True
                break
            log_prec += math.log(num / total)
            used += 1
        if zero or used == 0:
            scores.append(0.0)
            continue
        bp = 1.0 if len(hyp) > len(ref) else math.exp(1.0 - len(ref) / max(len(hyp), 1))
        scores.append(bp * math.exp(log_prec / used))
    return sum(scores) / len(scores)


def corpus_gleu(srcs, hyps, refs_per_sentence, max_n=4):
    """Average of sentence GLEU scores."""
    if not (len(srcs) == len(hyps) == len(refs_per_sentence)):
        raise ValueError("GLEU inputs must be aligned")
    per = [
        sentence_gleu(s, h, rs, max_n)
        for s, h, rs in zip(srcs, hyps, refs_per_sentence)
    ]
    return MetricReport("GLEU", sum(per) / len(per) if per else 0.0, per_sentence=per)


# -- minimal diff (used for gold edit construction) ----------------------

def levenshtein_edits(src, tgt):
    """One minimal edit set turning src into tgt (adjacent ops merged).

    Deterministic backtrace preference: match > substitution > deletion
    > insertion.
    """
    n, m = len(src), len(tgt)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (0 if src[i - 1] == tgt[j - 1] else 1)
            dist[i][j] = min(sub, dist[i - 1][j] + 1, dist[i][j - 1] + 1)
    # backtrace from (n, m)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and src[i - 1] == tgt[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            ops.append(("match", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            ops.append(("sub", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(("del", i - 1, j))
            i, j = i - 1, j
        else:
            ops.append(("ins", i, j - 1))
            i, j = i, j - 1
    ops.reverse()
    edits = []
    run = None  # [src_start, src_end, tgt_start, tgt_end]
    for op, si, tj in ops:
        if op == "match":
            if run is not None:
                edits.append(Edit(run[0], run[1], tuple(tgt[run[2] : run[3]])))
                run = None
            continue
        s0, s1 = (si, si + 1) if op in ("sub", "del") else (si, si)
        t0, t1 = (tj, tj + 1) if op in ("sub", "ins") else (tj, tj)
        if run is None:
            run = [s0, s1, t0, t1]
        else:
            run[1] = max(run[1], s1)
            run[3] = max(run[3], t1)
    if run is not None:
        edits.append(Edit(run[0], run[1], tuple(tgt[run[2] : run[3]])))
    return EditSet(edits)


# -- M2 MaxMatch --------------------------------------------------------

def extract_system_edits(src, hyp, gold=None, merge_cap=2):
    """Choose the candidate edit decomposition of src -> hyp that best
    matches the gold edits: maximize gold matches, then minimize the
    number of proposed edits.

    Returns the chosen EditSet. With gold=None it degenerates to the
    minimal-edit decomposition.
    """
    n, m = len(src), len(hyp)
    gold_keys = {e.key() for e in gold} if gold is not None else set()
    if src == hyp:
        return EditSet([])
    # best[(i, j)] = (gold matches, -edit count); backpointer for path recovery
    best = {(0, 0): (0, 0)}
    back = {}
    for i in range(n + 1):
        for j in range(m + 1):
            cur = best.get((i, j))
            if cur is None:
                continue
            if i < n and j < m and src[i] == hyp[j]:
                _relax(best, back, (i + 1, j + 1), cur, (i, j, "match"))
            # edit steps (i, j) -> (i2, j2); incremental LCS over the span
            lcs_prev = [0] * (m - j + 1)
            for a in range(0, n - i + 1):
                lcs_row = [0] * (m - j + 1)
                if a > 0:
                    for b in range(1, m - j + 1):
                        if src[i + a - 1] == hyp[j + b - 1]:
                            lcs_row[b] = lcs_prev[b - 1] + 1
                        else:
                            lcs_row[b] = max(lcs_prev[b], lcs_row[b - 1])
                for b in range(0, m - j + 1):
                    if a == 0 and b == 0:
                        continue
                    if lcs_row[b] > merge_cap:
                        continue
                    if a == b and lcs_row[b] == a:
                        continue  # identity edit
                    repl = tuple(hyp[j : j + b])
                    gained = 1 if (i, i + a, repl) in gold_keys else 0
                    val = (cur[0] + gained, cur[1] - 1)
                    _relax(best, back, (i + a, j + b), val, (i, j, "edit"))
                lcs_prev = lcs_row
    # recover the chosen path
    edits = []
    node = (n, m)
    while node != (0, 0):
        pi, pj, kind = back[node]
        if kind == "edit":
            edits.append(Edit(pi, node[0], tuple(hyp[pj : node[1]])))
        node = (pi, pj)
    edits.reverse()
    return EditSet(edits)


def enumerate_edit_sets(src, hyp, merge_cap=2):
    """All candidate edit decompositions of src -> hyp (small inputs only).

    Yields EditSets; exponential in sentence length, intended for short
    sentences and oracle-style checks.
    """
    n, m = len(src), len(hyp)

    def lcs(a, b):
        prev = [0] * (len(b) + 1)
        for x in a:
            row = [0]
            for j, y in enumerate(b):
                row.append(prev[j] + 1 if x == y else max(prev[j + 1], row[-1]))
            prev = row
        return prev[-1]

    def walk(i, j, acc):
        if i == n and j == m:
            yield EditSet(list(acc))
            return
        if i < n and j < m and src[i] == hyp[j]:
            yield from walk(i + 1, j + 1, acc)
        for i2 in range(i, n + 1):
            for j2 in range(j, m + 1):
                if i2 == i and j2 == j:
                    continue
                span_src = src[i:i2]
                span_hyp = hyp[j:j2]
                if lcs(span_src, span_hyp) > merge_cap:
                    continue
                if i2 - i == j2 - j and list(span_src) == list(span_hyp):
                    continue
                acc.append(Edit(i, i2, tuple(span_hyp)))
                yield from walk(i2, j2, acc)
                acc.pop()

    yield from walk(0, 0, [])


def _relax(best, back, node, val, pointer):
    old = best.get(node)
    if old is None or val > old:
        best[node] = val
        back[node] = pointer


def f_beta(tp, proposed, gold, beta=0.5):
    p = tp / proposed if proposed > 0 else 1.0
    r = tp / gold if gold > 0 else 1.0
    denom = beta * beta * p + r
    f = (1 + beta * beta) * p * r / denom if denom > 0 else 0.0
    return p, r, f


def m2_score(srcs, hyps, golds, beta=0.5, merge_cap=2):
    """MaxMatch corpus scoring.

    golds: per sentence, a dict annotator_id -> EditSet. For each
    sentence the system edit decomposition is chosen to best match each
    annotator, and the annotator maximizing the running corpus F_beta is
    kept (reference-scorer behavior).
    """
    if not (len(srcs) == len(hyps) == len(golds)):
        raise ValueError("m2_score inputs must be aligned")
    tp_total = prop_total = gold_total = 0
    for src, hyp, gold_by_ann in zip(srcs, hyps, golds):
        if not gold_by_ann:
            gold_by_ann = {0: EditSet([])}
        options = []
        for ann in sorted(gold_by_ann):
            gold = gold_by_ann[ann]
            chosen = extract_system_edits(src, hyp, gold, merge_cap)
            gold_keys = {e.key() for e in gold}
            tp = sum(1 for e in chosen if e.key() in gold_keys)
            options.append((tp, len(chosen), len(gold)))
        def cumulative_f(opt):
            _, _, f = f_beta(
                tp_total + opt[0], prop_total + opt[1], gold_total + opt[2], beta
            )
            return f
        best_opt = max(options, key=cumulative_f)
        tp_total += best_opt[0]
        prop_total += best_opt[1]
        gold_total += best_opt[2]
    p, r, f = f_beta(tp_total, prop_total, gold_total, beta)
    if prop_total == 0:
        p = 1.0
        r = tp_total / gold_total if gold_total > 0 else 1.0
    return MetricReport("M2", f, precision=p, recall=r)


# -- M2 file format ------------------------------------------------------

class M2ParseError(ValueError):
    pass


def parse_m2(text):
    """Parse M2 S/A-line blocks into (token lists, per-annotator EditSets)."""
    sentences = []
    golds = []
    tokens = None
    gold = None
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.rstrip("\n")
        if not line.strip():
            if tokens is not None:
                sentences.append(tokens)
                golds.append(gold)
                tokens, gold = None, None
            continue
        if line.startswith("S "):
            if tokens is not None:
                sentences.append(tokens)
                golds.append(gold)
            tokens = line[2:].split(" ")
            gold = {}
        elif line == "S":
            tokens = []
            gold = {}
        elif line.startswith("A "):
            if tokens is None:
                raise M2ParseError(f"line {lineno}: A-line before any S-line")
            fields = line[2:].split("|||")
            if len(fields) != 6:
                raise M2ParseError(f"line {lineno}: expected 6 fields, got {len(fields)}")
            span, etype, correction, _req, _note, ann = fields
            try:
                start_s, end_s = span.split(" ")
                start, end = int(start_s), int(end_s)
                ann_id = int(ann)
            except ValueError as exc:
                raise M2ParseError(f"line {lineno}: bad span or annotator: {exc}")
            if end < start:
                raise M2ParseError(f"line {lineno}: edit end {end} < start {start}")
            repl = tuple(correction.split(" ")) if correction else ()
            gold.setdefault(ann_id, EditSet([])).edits.append(
                Edit(start, end, repl, etype, ann_id)
            )
        else:
            raise M2ParseError(f"line {lineno}: unrecognized line {line!r}")
    if tokens is not None:
        sentences.append(tokens)
        golds.append(gold)
    return sentences, golds


def emit_m2(sentences, golds):
    """Serialize sentences and gold edits back to the M2 format."""
    blocks = []
    for tokens, gold in zip(sentences, golds):
        lines = ["S " + " ".join(tokens) if tokens else "S"]
        for ann in sorted(gold):
            for e in gold[ann].edits:
                corr = " ".join(e.replacement)
                lines.append(
                    f"A {e.start} {e.end}|||{e.type}|||{corr}|||REQUIRED|||-NONE-|||{ann}"
                )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
