#!/usr/bin/env python3
"""Regenerates data/sample_corpus.jsonl: 50 rollouts over 12 small math prompts."""
import json
import sys

PROBLEMS = [
    # id, prompt, final answer, intermediates, reference reasoning steps
    ("apples", "Tom has 3 apples and buys 5 more. How many apples does he have?", "8", ["3", "5"],
     ["Tom starts with 3 apples.", "He buys 5 more apples.", "3 + 5 = 8."]),
    ("half", "What is one half of three quarters?", "\\frac{3}{8}", ["3/4", "1/2"],
     ["Three quarters is 3/4.", "Half of it is 1/2 * 3/4.", "That equals 3/8."]),
    ("speed", "A car travels 150 km in 2.5 hours. What is its average speed in km/h?", "60", ["150", "2.5"],
     ["Distance is 150 km.", "Time is 2.5 hours.", "150 / 2.5 = 60."]),
    ("discount", "A shirt costs 40 dollars and is 25% off. What is the sale price?", "30", ["40", "10"],
     ["25% of 40 is 10.", "40 - 10 = 30."]),
    ("eggs", "A farmer collects 12 eggs a day for 7 days and sells 30. How many are left?", "54", ["84", "30"],
     ["12 * 7 = 84 eggs.", "He sells 30 eggs.", "84 - 30 = 54."]),
    ("ratio", "Simplify the ratio 18:24 and give it as a fraction.", "3/4", ["6"],
     ["The greatest common divisor is 6.", "18 / 6 = 3 and 24 / 6 = 4.", "The ratio is 3/4."]),
    ("decimal", "What is 0.2 plus 0.15?", "0.35", ["0.2", "0.15"],
     ["Write 0.2 as 0.20.", "0.20 + 0.15 = 0.35."]),
    ("percent", "What percent of 80 is 20?", "25\\%", ["20", "80"],
     ["Divide 20 by 80.", "20 / 80 = 0.25.", "0.25 is 25%."]),
    ("pages", "A book has 240 pages. Ana reads 1/3 of it on Monday. How many pages remain?", "160", ["80"],
     ["One third of 240 is 80.", "240 - 80 = 160."]),
    ("neg", "What is 7 minus 12?", "-5", ["7", "12"],
     ["Start at 7.", "Subtract 12.", "7 - 12 = -5."]),
    ("sum", "Add the fractions 1/6 and 1/3.", "\\dfrac{1}{2}", ["1/3", "2/6"],
     ["1/3 equals 2/6.", "1/6 + 2/6 = 3/6.", "3/6 simplifies to 1/2."]),
    ("symbolic", "Factor x^2 - 9.", "(x-3)(x+3)", [],
     ["x^2 - 9 is a difference of squares.", "It factors as (x-3)(x+3)."]),
]


def think(steps, numbered=False):
    if numbered:
        return "\n".join(f"{i}. {s}" for i, s in enumerate(steps, 1))
    return "\n".join(f"Step {i}: {s}" for i, s in enumerate(steps, 1))


def wrap(reasoning, answer):
    return f"<think>\n{reasoning}\n</think>\n<answer>{answer}</answer>"


def reference_text(steps, answer):
    return wrap(think(steps), answer)


def variants(pid, steps, answer):
    """Response styles cycled across the corpus."""
    wrong = {"apples": "9", "half": "3/4", "speed": "75", "discount": "10", "eggs": "84", "ratio": "18/24",
             "decimal": "0.17", "percent": "4", "pages": "80", "neg": "5", "sum": "2/9",
             "symbolic": "(x-9)(x+1)"}[pid]
    equivalent = {"apples": "8.0", "half": "0.375", "speed": "60.00", "discount": "$30$", "eggs": "54",
                  "ratio": "0.75", "decimal": "\\frac{7}{20}", "percent": "0.25", "pages": "160",
                  "neg": "-5.0", "sum": "0.5", "symbolic": "(x - 3)(x + 3)"}[pid]
    filler = " ".join(["let me double check this"] * 6)
    return [
        ("clean", wrap(think(steps), answer)),
        ("equivalent", wrap(think(steps, numbered=True), equivalent)),
        ("wrong", wrap(think(steps[:1]), wrong)),
        ("untagged", " ".join(steps) + f" So the answer is {answer}."),
        ("repetitive", wrap(think(steps) + "\n" + filler, answer)),
        ("terse", wrap(steps[-1], answer)),
    ]


def main(out):
    records = []
    counts = [5, 5, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4]  # 50 in total
    for index, ((pid, prompt, answer, inter, steps), n) in enumerate(zip(PROBLEMS, counts)):
        grouped = pid not in ("neg", "symbolic")
        styles = variants(pid, steps, answer)
        for k in range(n):
            style, response = styles[(k + index) % len(styles)]
            rec = {"id": f"{pid}-{k + 1}"}
            if grouped:
                rec["group_id"] = pid
            rec["prompt"] = prompt
            rec["response"] = response
            ref = {"final_answer": answer, "intermediate_values": inter}
            # A few references lack reasoning text, exercising inapplicable evaluators.
            if pid not in ("percent", "neg"):
                ref["reference_text"] = reference_text(steps, answer)
            rec["reference"] = ref
            records.append(rec)
    assert len(records) == 50, len(records)
    for rec in records:
        out.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main(sys.stdout)
