#include "slamacc/sync.hpp"

#include <algorithm>
#include <cmath>

#include "slamacc/error.hpp"

namespace slamacc {

namespace {

// Shared by the binary-search and merge paths so both produce bit-identical
// angles for the same bracketing pair.
JointAngles blend(const JointSample& lo, const JointSample& hi, int64_t t_ns,
                  InterpPolicy policy) {
  if (policy == InterpPolicy::Nearest)
    return (t_ns - lo.t_ns) <= (hi.t_ns - t_ns) ? lo.angles : hi.angles;
  double w = static_cast<double>(t_ns - lo.t_ns) / static_cast<double>(hi.t_ns - lo.t_ns);
  return lo.angles + w * (hi.angles - lo.angles);
}

}  // namespace

void JointLog::validate() const {
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].angles.allFinite())
      throw ValidationError("joint log: non-finite angles at sample " + std::to_string(i));
    if (i > 0 && samples[i].t_ns <= samples[i - 1].t_ns)
      throw ValidationError("joint log: timestamps not strictly increasing at sample " +
                            std::to_string(i));
  }
}

double JointLog::nominal_rate_hz() const {
  if (samples.size() < 2) return 0.0;
  double span_s = static_cast<double>(samples.back().t_ns - samples.front().t_ns) * 1e-9;
  return static_cast<double>(samples.size() - 1) / span_s;
}

void FrameLog::validate() const {
  for (size_t i = 1; i < frames.size(); ++i)
    if (frames[i].t_ns <= frames[i - 1].t_ns)
      throw ValidationError("frame log: timestamps not strictly increasing at frame " +
                            std::to_string(i));
}

JointAngles interpolate_joints(const JointLog& log, int64_t t_ns, const SyncOptions& opts) {
  log.validate();
  if (log.samples.empty()) throw ValidationError("interpolate_joints: empty joint log");
  const auto& s = log.samples;
  if (t_ns < s.front().t_ns || t_ns > s.back().t_ns)
    throw ValidationError("interpolate_joints: t=" + std::to_string(t_ns) +
                          " ns outside joint log span [" + std::to_string(s.front().t_ns) +
                          ", " + std::to_string(s.back().t_ns) + "]");

  auto hi = std::lower_bound(s.begin(), s.end(), t_ns,
                             [](const JointSample& a, int64_t t) { return a.t_ns < t; });
  if (hi->t_ns == t_ns) return hi->angles;
  auto lo = hi - 1;
  int64_t hole = hi->t_ns - lo->t_ns;
  if (hole > opts.max_gap_ns)
    throw ValidationError("interpolate_joints: bracketing gap " + std::to_string(hole) +
                          " ns exceeds max gap " + std::to_string(opts.max_gap_ns) + " ns");
  return blend(*lo, *hi, t_ns, opts.policy);
}

SyncResult synchronize_streams(const FrameLog& frames, const JointLog& joints,
                               const SyncOptions& opts) {
  frames.validate();
  joints.validate();
  if (joints.samples.empty())
    throw ValidationError("synchronize_streams: empty joint log");

  const auto& s = joints.samples;
  SyncResult out;
  size_t j = 0;
  for (const FrameRecord& f : frames.frames) {
    if (f.t_ns < s.front().t_ns || f.t_ns > s.back().t_ns) {
      out.drops.push_back({f.frame_id, f.t_ns, "out-of-span"});
      continue;
    }
    while (j + 1 < s.size() && s[j + 1].t_ns <= f.t_ns) ++j;
    // Now s[j].t <= f.t, the largest such index.
    if (s[j].t_ns == f.t_ns) {
      out.packets.push_back({f.frame_id, f.t_ns, s[j].angles, 0});
      continue;
    }
    int64_t hole = s[j + 1].t_ns - s[j].t_ns;
    if (hole > opts.max_gap_ns) {
      out.drops.push_back({f.frame_id, f.t_ns, "gap"});
      continue;
    }
    out.packets.push_back({f.frame_id, f.t_ns, blend(s[j], s[j + 1], f.t_ns, opts.policy), hole});
  }
  return out;
}

}  // namespace slamacc
