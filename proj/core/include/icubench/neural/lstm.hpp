#pragma once

#include <string>
#include <vector>

#include "icubench/neural/params.hpp"
#include "icubench/rng.hpp"

namespace icubench::nn {

/// Parameters of one LSTM direction. Gate rows are stacked in the order
/// input, forget, output, candidate: wx is [4H x D], wh is [4H x H],
/// bias is [4H x 1].
struct LstmDirection {
  ParamBlock* wx = nullptr;
  ParamBlock* wh = nullptr;
  ParamBlock* bias = nullptr;
};

/// Hidden states of both directions for every step; each [H x B].
struct EncoderState {
  std::vector<Mat> forward;
  std::vector<Mat> backward;

  int hidden() const { return forward.empty() ? 0 : static_cast<int>(forward.front().rows()); }
  /// h_t = [fwd_t ; bwd_t], [2H x B].
  Mat step(int t) const;
  /// h_T = [fwd_{L-1} ; bwd_0], [2H x B].
  Mat summary() const;
};

/// Bidirectional LSTM over padded, left-aligned batches. On padded steps
/// (mask 0) a direction holds its previous state, so the forward summary
/// is the state at the last valid step and the backward pass starts from
/// zero at the last valid step.
class BiLstm {
 public:
  BiLstm(ParamSet& params, const std::string& prefix, int input_width, int hidden, Rng& rng);

  int input_width() const { return input_width_; }
  int hidden() const { return hidden_; }
  LstmDirection& direction(int d) { return dir_[d]; }

  /// xs[t] is [D x B]; mask is [L x B] or empty.
  EncoderState forward(const std::vector<Mat>& xs, const Mat& mask);

  /// Backpropagates gradients w.r.t. each direction's per-step states
  /// (an empty matrix means zero) through the last forward call.
  /// Returns d xs and accumulates parameter gradients.
  std::vector<Mat> backward(const std::vector<Mat>& d_forward, const std::vector<Mat>& d_backward);

 private:
  struct StepCache {
    Mat gates;  // [4H x B] activations i, f, o, g
    Mat c;
    Mat tanh_c;
    Mat h_prev;
    Mat c_prev;
  };

  void run_direction(int d, const std::vector<Mat>& xs, const Mat& mask, std::vector<Mat>& hs);
  void back_direction(int d, const std::vector<Mat>& d_h, std::vector<Mat>& d_xs);

  int input_width_;
  int hidden_;
  LstmDirection dir_[2];
  // forward-call caches
  std::vector<Mat> xs_;
  Mat mask_;
  std::vector<StepCache> cache_[2];
};

}  // namespace icubench::nn
