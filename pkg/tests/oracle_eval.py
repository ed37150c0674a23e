"""Brute-force re-implementation of the evaluation definitions.

Deliberately written from scratch against the stated protocol (greedy
confidence-descending matching, all-point precision-envelope AP, micro
precision/recall, mAP over classes with ground truth) so the production
code can be checked against it. Keep this slow and obvious.
"""


def naive_iou(a, b):
    ax0, ax1 = a.cx - a.w / 2, a.cx + a.w / 2
    ay0, ay1 = a.cy - a.h / 2, a.cy + a.h / 2
    bx0, bx1 = b.cx - b.w / 2, b.cx + b.w / 2
    by0, by1 = b.cy - b.h / 2, b.cy + b.h / 2
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / ((ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter)


def naive_match(dets, truths, iou_threshold):
    """Replays the greedy definition; returns [(det, is_tp, truth_idx)]."""
    indexed = list(enumerate(dets))
    indexed.sort(key=lambda pair: (-pair[1].confidence, pair[1].cx, pair[1].cy, pair[0]))
    claimed = []
    labels = []
    for _, det in indexed:
        best = None
        best_iou = 0.0
        for j, truth in enumerate(truths):
            if j in claimed or truth.class_id != det.class_id:
                continue
            overlap = naive_iou(det, truth)
            if overlap < iou_threshold:
                continue
            if overlap > best_iou:
                best, best_iou = j, overlap
        if best is None:
            labels.append((det, False, None))
        else:
            claimed.append(best)
            labels.append((det, True, best))
    return labels


def naive_ap(flag_rows, n_truth):
    """All-point AP from [(confidence-desc-ordered) tp flags]."""
    if n_truth == 0:
        return None
    if not flag_rows:
        return 0.0
    points = []
    tp = fp = 0
    for is_tp in flag_rows:
        if is_tp:
            tp += 1
        else:
            fp += 1
        points.append((tp / n_truth, tp / (tp + fp)))
    ap = 0.0
    prev_recall = 0.0
    for recall, _ in points:
        if recall == prev_recall:
            continue
        best = max(p for r, p in points if r >= recall)
        ap += (recall - prev_recall) * best
        prev_recall = recall
    return ap


def naive_evaluate(per_image_dets, samples, n_classes, conf_threshold, iou_threshold):
    """Returns dict(precision, recall, map, per_class_ap, tp, fp, fn)."""
    tp = fp = fn = 0
    class_rows = {c: [] for c in range(n_classes)}
    class_truths = {c: 0 for c in range(n_classes)}
    for dets, truths in zip(per_image_dets, samples):
        kept = [d for d in dets if d.confidence >= conf_threshold]
        labels = naive_match(kept, truths, iou_threshold)
        matched = sum(1 for _, is_tp, _ in labels if is_tp)
        tp += matched
        fp += len(labels) - matched
        fn += len(truths) - matched
        for truth in truths:
            class_truths[truth.class_id] += 1
        for det, is_tp, _ in labels:
            class_rows[det.class_id].append((det.confidence, is_tp))
    per_class_ap = {}
    for c in range(n_classes):
        rows = sorted(class_rows[c], key=lambda r: -r[0])
        per_class_ap[c] = naive_ap([is_tp for _, is_tp in rows], class_truths[c])
    present = [ap for ap in per_class_ap.values() if ap is not None]
    return {
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
        "map": sum(present) / len(present) if present else 0.0,
        "per_class_ap": per_class_ap,
        "tp": tp,
        "fp": fp,
        "fn": fn,
    }
