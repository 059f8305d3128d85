#pragma once

#include <vector>

#include "rigidflow/extension.hpp"

namespace rigidflow {

/// One tracked point of the geometric change of variables at a fixed time:
/// image x = X(t,y), gradient and second derivatives with respect to the
/// reference position y. hess(m, c) stores d2 X_m / dy_j dy_k with the
/// symmetric pair c in {(0,0), (0,1), (1,1)}.
struct FlowSample {
  Vec2 x = Vec2::Zero();
  Mat2 grad = Mat2::Identity();
  Eigen::Matrix<double, 2, 3> hess = Eigen::Matrix<double, 2, 3>::Zero();

  double det() const { return grad.determinant(); }
};

struct FlowFrame {
  double time = 0.0;
  RigidState state;
  std::vector<FlowSample> pts;
};

/// Metric data of the change of variables at one sample.
struct SampleCoeffs {
  Mat2 push;        // grad X
  Mat2 pull;        // (grad X)^-1, i.e. grad Y at the image point
  Mat2 metric;      // g_ij = sum_k (d_i X_k)(d_j X_k)
  Mat2 metric_inv;  // g^ij
  Mat2 gamma[2];    // gamma[i](j,k): Christoffel symbols of g
};

SampleCoeffs map_coefficients(const FlowSample& s);

/// Composition X2(t, X1(t,.)^-1) evaluated on the shared sample set.
struct MapComposition {
  std::vector<Vec2> point;  // phi at the image of sample i under map 1
  std::vector<Mat2> grad;   // grad phi there
};

/// Sampled flow of the divergence-free extension field: X(t,.) tracked at a
/// fixed set of reference points, one frame per committed time. Integration is
/// classical one-step 4th order, with the first and second variational
/// equations advanced alongside so gradients stay at integrator accuracy and
/// det grad X = 1 holds to integrator tolerance.
class FlowMap {
 public:
  FlowMap() = default;
  FlowMap(std::vector<Vec2> ref_points, DiskGeometry geom, Cutoff cutoff,
          int substeps);

  int n_frames() const { return static_cast<int>(frames_.size()); }
  const FlowFrame& frame(int k) const { return frames_.at(k); }
  const std::vector<Vec2>& ref_points() const { return ref_points_; }
  const Cutoff& cutoff() const { return cutoff_; }
  const DiskGeometry& geometry() const { return geom_; }
  int substeps() const { return substeps_; }

  /// Starts the map at identity from the given initial state.
  void reset(const RigidState& initial, double t0 = 0.0);

  /// Integrates one step from the last committed frame, with velocities
  /// interpolating linearly to (lin_new, ang_new) over dt. Does not commit.
  FlowFrame advanced(const Vec2& lin_new, double ang_new, double dt) const;

  void commit(FlowFrame f) { frames_.push_back(std::move(f)); }
  void drop_last() { frames_.pop_back(); }

  /// Re-integrates a single point through all committed segments up to the
  /// given frame; returns position and gradient.
  FlowSample integrate_point(int frame_idx, const Vec2& y) const;

  /// Damped Newton inversion of X(t_frame, .) seeded by the rigid-zone closed
  /// form and falling back to the nearest stored sample.
  Vec2 invert(int frame_idx, const Vec2& x, double tol = 1e-10,
              int max_iter = 30, int* iters = nullptr) const;

 private:
  struct Segment {  // velocity path over one committed step
    RigidState s0;
    Vec2 lin1;
    double ang1;
    double dt;
    RigidState at(double sigma) const;
  };
  Segment segment(int k) const;
  int substeps_for(const Segment& seg) const;
  void rk4(const Segment& seg, std::vector<FlowSample>& pts,
           double t_offset = 0.0, double length = -1.0) const;

  std::vector<Vec2> ref_points_;
  DiskGeometry geom_;
  Cutoff cutoff_;
  int substeps_ = 4;
  std::vector<FlowFrame> frames_;
};

/// Builds a flow map over a prescribed rigid trajectory: states.front() is the
/// initial state, consecutive states are dt apart.
FlowMap integrate_flow(const std::vector<RigidState>& states, double dt,
                       std::vector<Vec2> ref_points, const DiskGeometry& geom,
                       const Cutoff& cutoff, int substeps);

/// phi(t,x) = X2(t, X1(t,.)^-1) on the shared sample set at one frame.
MapComposition compose_maps(const FlowMap& map1, const FlowMap& map2,
                            int frame_idx);

}  // namespace rigidflow
