"""CLEAR-MOT and identity metrics over per-frame boxed tracks.

Per-frame matching carries over the previous correspondence while it still
holds, then assigns the remainder by minimum 1-IoU cost. Identity switches
count changes against a target's most recent match; fragmentations count
tracked -> untracked -> tracked transitions. MOTP here is the mean IoU of
matched pairs (IoU-based MOTP). Identity scores come from one global
bipartite matching of whole trajectories.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import boxes_to_array, iou_matrix

MOSTLY_TRACKED_RATIO = 0.8


@dataclass
class MotReport:
    mota: float
    motp: float
    idf1: float
    idp: float
    idr: float
    fp: int
    fn: int
    ids: int
    frag: int
    mt: int
    total_gt: int
    per_frame_matches: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "MOTA": self.mota, "MOTP": self.motp, "IDF1": self.idf1,
            "IDP": self.idp, "IDR": self.idr, "FP": self.fp, "FN": self.fn,
            "IDS": self.ids, "FRAG": self.frag, "MT": self.mt,
            "total_gt": self.total_gt,
        }

    def format_report(self) -> str:
        return (
            f"MOTA {self.mota:7.4f}  MOTP {self.motp:7.4f}  IDF1 {self.idf1:7.4f}  "
            f"IDP {self.idp:7.4f}  IDR {self.idr:7.4f}\n"
            f"FP {self.fp:6d}  FN {self.fn:6d}  IDS {self.ids:5d}  "
            f"FRAG {self.frag:5d}  MT {self.mt:4d}  GT {self.total_gt:6d}"
        )


def _boxes_by_frame(tracks) -> dict:
    frames = {}
    for t in tracks:
        for e in t.entries:
            frames.setdefault(e.frame, []).append((t.track_id, e.box))
    return frames


def evaluate(gt_tracks, hyp_tracks, iou_threshold: float = 0.5) -> MotReport:
    """Score hypothesis tracks against ground-truth tracks, both given as
    per-frame boxed tracks."""
    if not (0.0 < iou_threshold <= 1.0):
        raise ValueError("iou_threshold must be in (0, 1]")
    gt_frames = _boxes_by_frame(gt_tracks)
    hyp_frames = _boxes_by_frame(hyp_tracks)
    all_frames = sorted(set(gt_frames) | set(hyp_frames))

    last_match = {}
    last_status = {}
    ever_matched = set()
    fp = fn = ids = frag = 0
    total_gt = total_hyp = 0
    motp_sum = 0.0
    motp_n = 0
    matched_frames = {}
    gt_frames_count = {}
    overlap_counts = {}
    per_frame_matches = []

    for frame in all_frames:
        gt_here = gt_frames.get(frame, [])
        hyp_here = hyp_frames.get(frame, [])
        total_gt += len(gt_here)
        total_hyp += len(hyp_here)
        gt_ids = [g for g, _ in gt_here]
        hyp_ids = [h for h, _ in hyp_here]
        ious = iou_matrix(boxes_to_array([b for _, b in gt_here]),
                          boxes_to_array([b for _, b in hyp_here]))

        # identity bookkeeping for IDF1: all threshold-passing pairs count
        for r, c in zip(*np.nonzero(ious >= iou_threshold)):
            key = (gt_ids[int(r)], hyp_ids[int(c)])
            overlap_counts[key] = overlap_counts.get(key, 0) + 1

        matches = {}
        taken = set()
        hyp_pos = {h: j for j, h in enumerate(hyp_ids)}
        for i, g in enumerate(gt_ids):
            h = last_match.get(g)
            if h is not None and h in hyp_pos and h not in taken:
                j = hyp_pos[h]
                if ious[i, j] >= iou_threshold:
                    matches[g] = h
                    taken.add(h)
                    motp_sum += float(ious[i, j])
                    motp_n += 1
        free_rows = [i for i, g in enumerate(gt_ids) if g not in matches]
        free_cols = [j for j, h in enumerate(hyp_ids) if h not in taken]
        if free_rows and free_cols:
            sub = 1.0 - ious[np.ix_(free_rows, free_cols)]
            sub[sub > 1.0 - iou_threshold] = 1e6
            for r, c in solve_pairs(sub):
                if sub[r, c] < 1e6:
                    g, h = gt_ids[free_rows[r]], hyp_ids[free_cols[c]]
                    matches[g] = h
                    motp_sum += float(ious[free_rows[r], free_cols[c]])
                    motp_n += 1

        for g, h in matches.items():
            prev = last_match.get(g)
            if prev is not None and prev != h:
                ids += 1
            last_match[g] = h
            if g in ever_matched and last_status.get(g) is False:
                frag += 1
            ever_matched.add(g)
            matched_frames[g] = matched_frames.get(g, 0) + 1
        for g in gt_ids:
            gt_frames_count[g] = gt_frames_count.get(g, 0) + 1
            last_status[g] = g in matches

        fn += len(gt_here) - len(matches)
        fp += len(hyp_here) - len(matches)
        per_frame_matches.append((frame, sorted(matches.items())))

    # identity metrics: one global trajectory matching maximizing shared frames
    gt_all = sorted(gt_frames_count)
    hyp_all = sorted({t.track_id for t in hyp_tracks})
    idtp = 0
    if gt_all and hyp_all and overlap_counts:
        counts = np.zeros((len(gt_all), len(hyp_all)))
        gi = {g: i for i, g in enumerate(gt_all)}
        hi = {h: i for i, h in enumerate(hyp_all)}
        for (g, h), n in overlap_counts.items():
            counts[gi[g], hi[h]] = n
        for r, c in solve_pairs(-counts):
            idtp += int(counts[r, c])
    idp = idtp / total_hyp if total_hyp else 0.0
    idr = idtp / total_gt if total_gt else 0.0
    denom = total_gt + total_hyp
    idf1 = 2.0 * idtp / denom if denom else 0.0

    mt = sum(1 for g, n in gt_frames_count.items()
             if matched_frames.get(g, 0) / n >= MOSTLY_TRACKED_RATIO)
    mota = 1.0 - (fn + fp + ids) / total_gt if total_gt else 1.0
    motp = motp_sum / motp_n if motp_n else 0.0
    return MotReport(mota, motp, idf1, idp, idr, fp, fn, ids, frag, mt,
                     total_gt, per_frame_matches)


def solve_pairs(cost: np.ndarray) -> list:
    if cost.size == 0:
        return []
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows, cols))
