#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slamacc/kinematics.hpp"

namespace slamacc {

struct JointSample {
  int64_t t_ns = 0;
  JointAngles angles = JointAngles::Zero();
};

struct JointLog {
  std::vector<JointSample> samples;

  // Throws ValidationError unless timestamps strictly increase and all
  // angles are finite.
  void validate() const;

  // (n-1) / span, in Hz; 0 for fewer than two samples.
  double nominal_rate_hz() const;
};

struct FrameRecord {
  int64_t t_ns = 0;
  int64_t frame_id = 0;
};

struct FrameLog {
  std::vector<FrameRecord> frames;

  void validate() const;
};

struct SyncedPacket {
  int64_t frame_id = 0;
  int64_t t_ns = 0;
  JointAngles angles = JointAngles::Zero();
  int64_t gap_ns = 0;  // distance between the bracketing joint samples
};

struct DroppedFrame {
  int64_t frame_id = 0;
  int64_t t_ns = 0;
  std::string reason;  // "out-of-span" or "gap"
};

struct SyncResult {
  std::vector<SyncedPacket> packets;
  std::vector<DroppedFrame> drops;
};

enum class InterpPolicy { Linear, Nearest };

struct SyncOptions {
  int64_t max_gap_ns = 50'000'000;
  InterpPolicy policy = InterpPolicy::Linear;
};

/// Joint angles at time t. A query landing exactly on a sample returns that
/// sample; otherwise the bracketing pair is interpolated per policy. Throws
/// ValidationError when t is outside the log span or the bracketing hole
/// exceeds max_gap.
JointAngles interpolate_joints(const JointLog& log, int64_t t_ns,
                               const SyncOptions& opts = {});

/// One packet per frame that falls inside the joint-log span with a
/// bracketing hole of at most max_gap; the rest land in the drop list with a
/// reason. Single forward merge over both logs.
SyncResult synchronize_streams(const FrameLog& frames, const JointLog& joints,
                               const SyncOptions& opts = {});

}  // namespace slamacc
