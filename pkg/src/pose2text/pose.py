"""Skeletal pose clips: validation, normalization, resampling, truncation, disk I/O.

A pose frame is an ``(85, 3)`` float array of ``(x, y, z)`` keypoint
coordinates; a clip is an ordered stack of frames at a fixed frame rate.
The canonical keypoint order is frozen as left hand (21), right hand (21),
upper body (13), face (30). Missing keypoints are stored as ``(0, 0, 0)``.

All functions are pure: they never mutate their argument clip and are safe
to call from any number of workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    CorruptFrameError,
    DatasetParseError,
    InvalidDimensionsError,
    SchemaError,
    SubRateClipError,
)

#: Number of keypoints per frame and values per flattened frame.
NUM_KEYPOINTS = 85
FRAME_DIM = NUM_KEYPOINTS * 3

#: Canonical keypoint layout: region name -> number of keypoints, in order.
KEYPOINT_LAYOUT = (
    ("left_hand", 21),
    ("right_hand", 21),
    ("upper_body", 13),
    ("face", 30),
)

#: Default cap on model input length, in frames.
MAX_INPUT_FRAMES = 256


def _as_frames_array(frames, clip_id="<clip>"):
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1:] != (NUM_KEYPOINTS, 3):
        raise SchemaError(
            f"clip {clip_id!r}: frames must have shape (T, {NUM_KEYPOINTS}, 3), "
            f"got {arr.shape}"
        )
    return arr


@dataclass(eq=False)
class PoseClip:
    """One video's pose sequence.

    ``frames`` has shape ``(T, 85, 3)``. ``width``/``height`` record the
    source resolution the coordinates are expressed in; ``1.0`` means the
    clip is already normalized to unit coordinates. ``truncated`` is
    transient metadata set by :func:`truncate_frames` and is not serialized.
    """

    id: str
    fps: int
    frames: np.ndarray
    text: str | None = None
    width: float = 1.0
    height: float = 1.0
    truncated: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.frames = _as_frames_array(self.frames, self.id)
        if int(self.fps) != self.fps or self.fps < 1:
            raise SchemaError(f"clip {self.id!r}: fps must be a positive integer, got {self.fps}")
        self.fps = int(self.fps)

    def __len__(self):
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PoseClip):
            return NotImplemented
        return (
            self.id == other.id
            and self.fps == other.fps
            and self.text == other.text
            and self.width == other.width
            and self.height == other.height
            and self.frames.shape == other.frames.shape
            and bool(np.all(self.frames == other.frames))
        )


def check_frame(frame, *, name="frame"):
    """Validate one frame array: shape ``(85, 3)`` and all coordinates finite.

    Returns the frame as a float64 array. Raises :class:`ShapeError`-family
    errors otherwise; non-finite coordinates name the offending keypoint.
    """
    arr = np.asarray(frame, dtype=np.float64)
    if arr.shape != (NUM_KEYPOINTS, 3):
        raise SchemaError(f"{name}: expected shape ({NUM_KEYPOINTS}, 3), got {arr.shape}")
    finite = np.isfinite(arr)
    if not finite.all():
        bad = int(np.argwhere(~finite.all(axis=1))[0, 0])
        raise CorruptFrameError(f"{name}: non-finite coordinate at keypoint {bad}")
    return arr


def normalize_frame(frame, width, height):
    """Scale pixel coordinates to fractions of the frame size.

    ``x`` is divided by ``width``, ``y`` by ``height`` and ``z`` by ``width``
    (depth shares the horizontal scale; pass the frame through unchanged with
    ``width == height == 1``). In-frame keypoints land in ``[0, 1]`` for x/y.
    """
    if width <= 0 or height <= 0:
        raise InvalidDimensionsError(f"width and height must be positive, got ({width}, {height})")
    arr = check_frame(frame)
    return arr / np.array([width, height, width], dtype=np.float64)


def normalize_clip(clip: PoseClip, *, normalize_z: bool = True) -> PoseClip:
    """Normalize every frame of ``clip`` by its stored width/height.

    The returned clip has ``width == height == 1``. ``normalize_z=False``
    leaves the depth coordinate untouched (the z/width convention is a
    documented choice, not a property of the data).
    """
    if clip.width <= 0 or clip.height <= 0:
        raise InvalidDimensionsError(
            f"clip {clip.id!r}: width and height must be positive, got ({clip.width}, {clip.height})"
        )
    finite = np.isfinite(clip.frames)
    if not finite.all():
        t, k = np.argwhere(~finite.all(axis=2))[0]
        raise CorruptFrameError(f"clip {clip.id!r}: non-finite coordinate at frame {t}, keypoint {k}")
    scale = np.array([clip.width, clip.height, clip.width if normalize_z else 1.0])
    return replace(clip, frames=clip.frames / scale, width=1.0, height=1.0)


def resample_fps(clip: PoseClip, target_fps: int) -> PoseClip:
    """Subsample ``clip`` to ``target_fps`` by uniform index selection.

    Output frame ``i`` is input frame ``floor(i * fps / target_fps)``; the
    output has ``ceil(T * target_fps / fps)`` frames. Upsampling is refused:
    clips below the target rate raise :class:`SubRateClipError` so the caller
    can discard them.
    """
    if target_fps < 1:
        raise SubRateClipError(f"target_fps must be >= 1, got {target_fps}")
    if clip.fps < target_fps:
        raise SubRateClipError(
            f"clip {clip.id!r} is below the target rate ({clip.fps} fps < {target_fps} fps)"
        )
    if clip.fps == target_fps:
        return clip
    n_out = math.ceil(len(clip) * target_fps / clip.fps)
    idx = (np.arange(n_out) * clip.fps) // target_fps
    return replace(clip, fps=int(target_fps), frames=clip.frames[idx])


def truncate_frames(clip: PoseClip, max_frames: int = MAX_INPUT_FRAMES) -> PoseClip:
    """Keep the first ``max_frames`` frames; flag the clip if anything was cut."""
    if max_frames < 1:
        raise SchemaError(f"max_frames must be >= 1, got {max_frames}")
    if len(clip) <= max_frames:
        return replace(clip, truncated=False)
    return replace(clip, frames=clip.frames[:max_frames], truncated=True)


def flatten_frame(frame) -> np.ndarray:
    """Flatten an ``(85, 3)`` frame to its 255-vector, ``(x, y, z)`` per keypoint."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.shape != (NUM_KEYPOINTS, 3):
        raise SchemaError(f"expected shape ({NUM_KEYPOINTS}, 3), got {arr.shape}")
    return arr.reshape(FRAME_DIM)


def unflatten_frame(vector) -> np.ndarray:
    """Inverse of :func:`flatten_frame`."""
    arr = np.asarray(vector, dtype=np.float64)
    if arr.shape != (FRAME_DIM,):
        raise SchemaError(f"expected shape ({FRAME_DIM},), got {arr.shape}")
    return arr.reshape(NUM_KEYPOINTS, 3)


def clip_matrix(clip: PoseClip) -> np.ndarray:
    """The clip's frames flattened to a ``(T, 255)`` matrix."""
    return clip.frames.reshape(len(clip), FRAME_DIM)


def _clip_to_record(clip: PoseClip) -> dict:
    return {
        "id": clip.id,
        "fps": clip.fps,
        "width": clip.width,
        "height": clip.height,
        "text": clip.text,
        "frames": clip.frames.tolist(),
    }


def _record_to_clip(record: dict, line_no: int) -> PoseClip:
    for key in ("id", "fps", "width", "height", "frames"):
        if key not in record:
            raise SchemaError(f"line {line_no}: record is missing field {key!r}")
    clip_id = record["id"]
    frames = record["frames"]
    if not isinstance(frames, list):
        raise SchemaError(f"line {line_no}: clip {clip_id!r}: frames must be a list")
    for t, frame in enumerate(frames):
        if len(frame) != NUM_KEYPOINTS:
            raise SchemaError(
                f"line {line_no}: clip {clip_id!r}: frame {t} has {len(frame)} keypoints, "
                f"expected {NUM_KEYPOINTS}"
            )
    return PoseClip(
        id=clip_id,
        fps=record["fps"],
        frames=np.asarray(frames, dtype=np.float64).reshape(len(frames), NUM_KEYPOINTS, 3),
        text=record.get("text"),
        width=record["width"],
        height=record["height"],
    )


def save_pose_dataset(clips: Iterable[PoseClip], path) -> None:
    """Write clips as line-delimited JSON records, one clip per line.

    Coordinates are serialized with full round-trip precision, so
    ``load_pose_dataset(save_pose_dataset(clips))`` reproduces every value
    bit for bit.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for clip in clips:
            fh.write(json.dumps(_clip_to_record(clip)) + "\n")


def load_pose_dataset(path) -> list[PoseClip]:
    """Read a line-delimited clip dataset written by :func:`save_pose_dataset`."""
    clips = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"line {line_no}: malformed record: {exc}") from exc
            if not isinstance(record, dict):
                raise DatasetParseError(f"line {line_no}: record must be a JSON object")
            clips.append(_record_to_clip(record, line_no))
    return clips


def preprocess_clips(
    clips: Sequence[PoseClip],
    target_fps: int,
    max_frames: int = MAX_INPUT_FRAMES,
    normalize: bool = True,
) -> tuple[list[PoseClip], list[PoseClip]]:
    """Full preprocessing chain: normalize, resample, truncate.

    Returns ``(kept, discarded)`` where ``discarded`` holds clips whose
    native rate is below ``target_fps``.
    """
    kept, discarded = [], []
    for clip in clips:
        if normalize:
            clip = normalize_clip(clip)
        try:
            clip = resample_fps(clip, target_fps)
        except SubRateClipError:
            discarded.append(clip)
            continue
        kept.append(truncate_frames(clip, max_frames))
    return kept, discarded
