"""Writes model_history.jsonl: nine models scored against two baselines, as history records."""
import json

models = ["GPT3.5", "Mistral", "Gemini1.5", "DS-r1", "Llama3.3", "Gemma3", "Vicuna", "Falcon3", "Qwen"]
rows = {
    1: {"gt": (0.80, 0.92, 0.09),
        "icr": [0.16, 0.28, 0.29, 0.26, 0.19, 0.29, 0.36, 0.37, 0.34],
        "ipr": [0.07, 0.20, 0.08, 0.08, 0.20, 0.05, 0.28, 0.37, 0.37],
        "ci": [0.07, 0.16, 0.11, 0.22, 0.03, 0.18, 0.17, 0.15, 0.14],
        "hal": [0.70, 0.78, 0.80, 0.61, 0.61, 0.90, 0.63, 0.71, 0.50]},
    2: {"gt": (0.58, 0.97, 0.12),
        "icr": [0.04, 0.33, 0.38, 0.29, 0.35, 0.39, 0.36, 0.39, 0.22],
        "ipr": [0.33, 0.18, 0.08, 0.04, 0.14, 0.15, 0.66, 0.25, 0.28],
        "ci": [0.03, 0.20, 0.22, 0.15, 0.18, 0.15, 0.14, 0.15, 0.01],
        "hal": [0.68, 0.41, 0.95, 0.57, 0.95, 0.57, 0.73, 0.81, 0.28]},
}
w = (1 / 3) / ((1 / 3 + 1 / 3) + 1 / 3)
with open("model_history.jsonl", "w") as f:
    for ts, row in rows.items():
        gi, gp, gc = row["gt"]
        for k, m in enumerate(models):
            icr, ipr, ci, hal = row["icr"][k], row["ipr"][k], row["ci"][k], row["hal"][k]
            d = (abs(icr - gi), abs(ipr - gp), abs(ci - gc))
            score = w * d[0] + w * d[1] + w * d[2]
            rec = {"timestamp": ts, "model": m, "batch_id": f"src{ts}",
                   "icr": icr, "ipr": ipr, "ci": ci, "hal": hal,
                   "base_icr": gi, "base_ipr": gp, "base_ci": gc, "base_hal": None,
                   "d_icr": d[0], "d_ipr": d[1], "d_ci": d[2], "d_hal": None,
                   "score": score, "threshold": None, "flagged": False,
                   "hall_total": 0, "hall_failed": 0}
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")
