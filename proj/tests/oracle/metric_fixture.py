#!/usr/bin/env python3
"""Independent oracle for the metric fixture.

Writes synthetic judgments for 2 judges x 2 languages x (original + 6 biases),
then computes accuracies, deltas, directions and MADs with exact fractions and
renders the expected text table. Regenerate with:

    python3 tests/oracle/metric_fixture.py tests/data/metrics
"""
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

JUDGES = {"judge-a": 3, "judge-b": 1}  # id -> trials
LANGS = [("cpp", "C++"), ("python", "Python")]
BIASES = [
    ("authority", "Authority", +0.10),
    ("self_declared", "Self-declared", +0.25),
    ("variable_rename:24", "Variable Rename", +0.05),
    ("reverse_authority", "Reverse Authority", -0.10),
    ("misleading_task", "Misleading Task", -0.30),
    ("illusory_complexity:1", "Illusory Complexity", 0.0),
]
ITEMS_PER_LABEL = 5
GROUPINGS = ["overall", "bias", "language", "judge", "judge_language", "judge_bias", "language_bias"]


def generate(seed):
    rng = random.Random(seed)
    rows = []
    for judge, trials in JUDGES.items():
        skill = 0.75 if judge == "judge-a" else 0.65
        for lang, _ in LANGS:
            for bias, _, shift in [("original", "", 0.0)] + BIASES:
                for label in ("correct", "incorrect"):
                    # shift > 0 pushes verdicts toward "correct"
                    p_correct_verdict = skill + shift if label == "correct" else (1 - skill) + shift
                    for n in range(ITEMS_PER_LABEL):
                        item = f"{lang}-{label[0]}{n}~{bias}"
                        for t in range(trials):
                            u = rng.random()
                            if u < 0.05:
                                verdict = "unparseable"
                            else:
                                verdict = "correct" if rng.random() < p_correct_verdict else "incorrect"
                            rows.append(dict(judge_id=judge, language=lang, bias=bias, paradigm="direct",
                                             item_id=item, label=label, trial=t, verdict=verdict))
    return rows


def compute(rows):
    items = {}
    for r in rows:
        key = (r["judge_id"], r["language"], r["bias"])
        it = items.setdefault(key, {}).setdefault(r["item_id"], [r["label"], 0, 0])
        it[1] += r["verdict"] == r["label"]
        it[2] += 1
    acc = {}
    for key, per in items.items():
        sums = {"correct": [Fraction(0), 0], "incorrect": [Fraction(0), 0]}
        for label, right, total in per.values():
            sums[label][0] += Fraction(right, total)
            sums[label][1] += 1
        acc[key] = {l: s / n for l, (s, n) in sums.items()} | {"n_" + l: n for l, (s, n) in sums.items()}
    conds = []
    deltas = {g: {} for g in GROUPINGS}
    for judge in sorted(JUDGES):
        for lang, _ in LANGS:
            base = acc[(judge, lang, "original")]
            for bias, _, _ in [("original", "", 0)] + BIASES:
                a = acc[(judge, lang, bias)]
                dc = (a["correct"] - base["correct"]) * 100
                di = (a["incorrect"] - base["incorrect"]) * 100
                direction = ""
                if bias != "original":
                    if dc > 0 and di < 0:
                        direction = "positive"
                    elif dc < 0 and di > 0:
                        direction = "negative"
                    elif dc == 0 and di == 0:
                        direction = "neutral"
                    else:
                        direction = "mixed"
                    labels = {"overall": "all", "bias": bias, "language": lang, "judge": judge,
                              "judge_language": f"{judge}/{lang}", "judge_bias": f"{judge}/{bias}",
                              "language_bias": f"{lang}/{bias}"}
                    for g, lab in labels.items():
                        deltas[g].setdefault(lab, []).extend([dc, di])
                conds.append(dict(judge_id=judge, language=lang, bias=bias, acc_correct=a["correct"],
                                  acc_incorrect=a["incorrect"], n_correct=a["n_correct"],
                                  n_incorrect=a["n_incorrect"], delta_correct=dc, delta_incorrect=di,
                                  direction=direction))
    mads = []
    for g in GROUPINGS:
        for lab, ds in sorted(deltas[g].items()):
            mads.append(dict(grouping=g, group=lab, mad=sum(abs(d) for d in ds) / len(ds), n=len(ds)))
    return conds, mads


def one_decimal(x):
    tenths = x * 10
    lo = tenths.numerator // tenths.denominator
    frac = tenths - lo
    if frac == Fraction(1, 2):
        raise ValueError(f"rounding tie at {float(x)}")
    r = lo + (1 if frac > Fraction(1, 2) else 0)
    if r == 0:
        return "0.0"
    sign = "-" if r < 0 else ""
    r = abs(r)
    return f"{sign}{r // 10}.{r % 10}"


def signed(x):
    s = one_decimal(x)
    return s if s == "0.0" or s.startswith("-") else "+" + s


def render(conds, mads):
    by = {(c["judge_id"], c["language"], c["bias"]): c for c in conds}
    mad = {(m["grouping"], m["group"]): m["mad"] for m in mads}
    cells = [["Judge", "Language", "Code", "Original"] + [b[1] for b in BIASES] + ["MAD"]]
    for judge in sorted(JUDGES):
        for lang, lang_name in LANGS:
            base = by[(judge, lang, "original")]
            c = [judge, lang_name, "Correct", one_decimal(base["acc_correct"] * 100)]
            i = ["", "", "Incorrect", one_decimal(base["acc_incorrect"] * 100)]
            d = ["", "", "Direction", ""]
            for bias, _, _ in BIASES:
                row = by[(judge, lang, bias)]
                c.append(f'{one_decimal(row["acc_correct"] * 100)} ({signed(row["delta_correct"])})')
                i.append(f'{one_decimal(row["acc_incorrect"] * 100)} ({signed(row["delta_incorrect"])})')
                d.append(row["direction"])
            c.append(one_decimal(mad[("judge_language", f"{judge}/{lang}")]))
            cells += [c, i, d]
    widths = [max(len(r[k]) for r in cells if k < len(r)) for k in range(len(cells[0]))]
    lines = []
    for r in cells:
        parts = [v.ljust(widths[k]) if k < 3 else v.rjust(widths[k]) for k, v in enumerate(r)]
        lines.append("  ".join(parts).rstrip())
    out = "Direct evaluation: accuracy % (change in %p vs. Original)\n\n" + "\n".join(lines) + "\n\n"
    out += "MAD by bias (%p): " + ", ".join(f"{name} {one_decimal(mad[('bias', b)])}" for b, name, _ in BIASES) + "\n"
    out += "MAD by language (%p): " + ", ".join(
        f"{name} {one_decimal(mad[('language', l)])}" for l, name in LANGS) + "\n"
    out += "MAD by judge (%p): " + ", ".join(f"{j} {one_decimal(mad[('judge', j)])}" for j in sorted(JUDGES)) + "\n"
    out += f"Overall MAD (%p): {one_decimal(mad[('overall', 'all')])}\n"
    return out


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = generate(seed=20250101)
    conds, mads = compute(rows)
    table = render(conds, mads)
    with open(out / "judgments.jsonl", "w") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")
    exact = lambda v: float(v) if isinstance(v, Fraction) else v
    expected = {"conditions": [{k: exact(v) for k, v in c.items()} for c in conds],
                "mads": [{k: exact(v) for k, v in m.items()} for m in mads]}
    (out / "expected.json").write_text(json.dumps(expected, indent=1, sort_keys=True) + "\n")
    (out / "golden_table.txt").write_text(table)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/metrics")
