#include <doctest.h>

#include <cmath>

#include "slamacc/error.hpp"
#include "slamacc/rng.hpp"
#include "slamacc/sync.hpp"

using namespace slamacc;

namespace {

const int64_t kMs = 1'000'000;

JointLog uniform_log(int64_t t0_ns, int64_t step_ns, int n, double slope_rad_per_ms = 0.0) {
  JointLog log;
  for (int i = 0; i < n; ++i) {
    JointSample s;
    s.t_ns = t0_ns + i * step_ns;
    s.angles.setConstant(slope_rad_per_ms * static_cast<double>(s.t_ns) / kMs);
    log.samples.push_back(s);
  }
  return log;
}

}  // namespace

TEST_CASE("interpolate_joints midpoint and exact hits") {
  JointLog log;
  JointSample a;
  a.t_ns = 0;
  a.angles.setZero();
  JointSample b;
  b.t_ns = 10 * kMs;
  b.angles.setConstant(0.1);
  log.samples = {a, b};

  JointAngles mid = interpolate_joints(log, 5 * kMs);
  for (int i = 0; i < 7; ++i) CHECK(mid(i) == doctest::Approx(0.05).epsilon(1e-12));

  CHECK((interpolate_joints(log, 0) - a.angles).norm() == 0.0);
  CHECK((interpolate_joints(log, 10 * kMs) - b.angles).norm() == 0.0);
}

TEST_CASE("interpolate_joints rejects out-of-span queries and wide gaps") {
  JointLog log = uniform_log(10 * kMs, 10 * kMs, 5);
  CHECK_THROWS_AS(interpolate_joints(log, 9 * kMs), ValidationError);
  CHECK_THROWS_AS(interpolate_joints(log, 51 * kMs), ValidationError);

  JointLog holed;
  holed.samples = {JointSample{0, JointAngles::Zero()},
                   JointSample{60 * kMs, JointAngles::Zero()}};
  CHECK_THROWS_AS(interpolate_joints(holed, 30 * kMs), ValidationError);

  SyncOptions wide;
  wide.max_gap_ns = 60 * kMs;
  CHECK_NOTHROW(interpolate_joints(holed, 30 * kMs, wide));
}

TEST_CASE("interpolate_joints nearest policy") {
  JointLog log;
  JointSample a;
  a.t_ns = 0;
  a.angles.setConstant(1.0);
  JointSample b;
  b.t_ns = 10 * kMs;
  b.angles.setConstant(2.0);
  log.samples = {a, b};

  SyncOptions nearest;
  nearest.policy = InterpPolicy::Nearest;
  CHECK(interpolate_joints(log, 4 * kMs, nearest)(0) == 1.0);
  CHECK(interpolate_joints(log, 6 * kMs, nearest)(0) == 2.0);
  CHECK(interpolate_joints(log, 5 * kMs, nearest)(0) == 1.0);  // tie goes to the earlier sample
}

TEST_CASE("synchronize_streams pairs every frame inside the span") {
  JointLog joints = uniform_log(0, 10 * kMs, 11, 0.001);
  FrameLog frames;
  frames.frames = {{0, 100}, {40 * kMs, 101}, {80 * kMs, 102}};

  SyncResult r = synchronize_streams(frames, joints);
  REQUIRE(r.packets.size() == 3);
  CHECK(r.drops.empty());
  CHECK(r.packets[0].frame_id == 100);
  CHECK(r.packets[1].frame_id == 101);
  CHECK(r.packets[2].frame_id == 102);
  for (const auto& p : r.packets) CHECK(p.gap_ns <= 10 * kMs);
  // Frames land exactly on samples here, so the angles match the ramp.
  CHECK(r.packets[1].angles(3) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("synchronize_streams drops out-of-span and gap frames with reasons") {
  JointLog joints;
  joints.samples = {JointSample{10 * kMs, JointAngles::Zero()},
                    JointSample{20 * kMs, JointAngles::Zero()},
                    JointSample{90 * kMs, JointAngles::Zero()}};
  FrameLog frames;
  frames.frames = {{5 * kMs, 1}, {15 * kMs, 2}, {55 * kMs, 3}, {95 * kMs, 4}};

  SyncResult r = synchronize_streams(frames, joints);
  REQUIRE(r.packets.size() == 1);
  CHECK(r.packets[0].frame_id == 2);
  REQUIRE(r.drops.size() == 3);
  CHECK(r.drops[0].frame_id == 1);
  CHECK(r.drops[0].reason == "out-of-span");
  CHECK(r.drops[1].frame_id == 3);
  CHECK(r.drops[1].reason == "gap");  // 70 ms hole, default max gap 50 ms
  CHECK(r.drops[2].frame_id == 4);
  CHECK(r.drops[2].reason == "out-of-span");

  CHECK(r.packets.size() + r.drops.size() == frames.frames.size());
}

TEST_CASE("frame exactly on a sample survives even inside a wide hole") {
  JointLog joints;
  joints.samples = {JointSample{0, JointAngles::Zero()},
                    JointSample{200 * kMs, JointAngles::Zero()}};
  FrameLog frames;
  frames.frames = {{0, 7}, {100 * kMs, 8}};

  SyncResult r = synchronize_streams(frames, joints);
  REQUIRE(r.packets.size() == 1);
  CHECK(r.packets[0].frame_id == 7);
  CHECK(r.packets[0].gap_ns == 0);
  REQUIRE(r.drops.size() == 1);
  CHECK(r.drops[0].reason == "gap");
}

TEST_CASE("synchronize_streams requires a joint log") {
  FrameLog frames;
  frames.frames = {{0, 1}};
  CHECK_THROWS_AS(synchronize_streams(frames, JointLog{}), ValidationError);
}

TEST_CASE("log validation rejects unsorted input") {
  JointLog bad;
  bad.samples = {JointSample{10, JointAngles::Zero()}, JointSample{10, JointAngles::Zero()}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  FrameLog badf;
  badf.frames = {{20, 1}, {10, 2}};
  CHECK_THROWS_AS(badf.validate(), ValidationError);

  JointLog nan_log;
  JointSample s;
  s.angles(2) = std::nan("");
  nan_log.samples = {s};
  CHECK_THROWS_AS(nan_log.validate(), ValidationError);
}

TEST_CASE("nominal rate derives from the span") {
  JointLog log = uniform_log(0, 10 * kMs, 101);
  CHECK(log.nominal_rate_hz() == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(JointLog{}.nominal_rate_hz() == 0.0);
}

TEST_CASE("merge matches a per-frame binary-search oracle") {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    // Random joint log with occasional holes.
    JointLog joints;
    int64_t t = static_cast<int64_t>(rng.uniform(0, 5 * kMs));
    int n = 2 + static_cast<int>(rng.uniform(0, 40));
    for (int i = 0; i < n; ++i) {
      JointSample s;
      s.t_ns = t;
      for (int k = 0; k < 7; ++k) s.angles(k) = rng.uniform(-3, 3);
      joints.samples.push_back(s);
      t += static_cast<int64_t>(rng.uniform(1, 80) * kMs);
    }

    FrameLog frames;
    int64_t ft = -20 * kMs;
    int m = static_cast<int>(rng.uniform(0, 30));
    for (int i = 0; i < m; ++i) {
      ft += static_cast<int64_t>(rng.uniform(1, 40) * kMs);
      frames.frames.push_back({ft, i});
    }

    SyncResult merged = synchronize_streams(frames, joints);

    // Oracle: answer each frame independently via interpolate_joints.
    std::vector<SyncedPacket> expect;
    for (const FrameRecord& f : frames.frames) {
      JointAngles a;
      try {
        a = interpolate_joints(joints, f.t_ns);
      } catch (const ValidationError&) {
        continue;
      }
      SyncedPacket p;
      p.frame_id = f.frame_id;
      p.t_ns = f.t_ns;
      p.angles = a;
      expect.push_back(p);
    }

    REQUIRE(merged.packets.size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i) {
      CHECK(merged.packets[i].frame_id == expect[i].frame_id);
      // Bitwise identical, not approximately equal.
      CHECK((merged.packets[i].angles - expect[i].angles).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(merged.packets.size() + merged.drops.size() == frames.frames.size());
  }
}
