#include "icubench/neural/lstm.hpp"

#include <cmath>

#include "icubench/errors.hpp"

namespace icubench::nn {

namespace {

inline Mat sigmoid(const Mat& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

Mat EncoderState::step(int t) const {
  const auto& f = forward.at(t);
  Mat h(2 * f.rows(), f.cols());
  h.topRows(f.rows()) = f;
  h.bottomRows(f.rows()) = backward.at(t);
  return h;
}

Mat EncoderState::summary() const {
  const auto& f = forward.back();
  Mat h(2 * f.rows(), f.cols());
  h.topRows(f.rows()) = f;
  h.bottomRows(f.rows()) = backward.front();
  return h;
}

BiLstm::BiLstm(ParamSet& params, const std::string& prefix, int input_width, int hidden, Rng& rng)
    : input_width_(input_width), hidden_(hidden) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  const std::vector<std::pair<int, std::string>> groups = {
      {0, "input_gate"}, {hidden, "forget_gate"}, {2 * hidden, "output_gate"}, {3 * hidden, "candidate"}};
  const char* names[2] = {"fwd", "bwd"};
  for (int d = 0; d < 2; ++d) {
    const std::string p = prefix + "/" + names[d];
    auto& wx = params.add(p + "/wx", 4 * hidden, input_width);
    auto& wh = params.add(p + "/wh", 4 * hidden, hidden);
    auto& b = params.add(p + "/bias", 4 * hidden, 1);
    for (auto* blk : {&wx, &wh, &b}) blk->row_groups = groups;
    init_uniform(wx.value, scale, rng);
    init_uniform(wh.value, scale, rng);
    b.value.middleRows(hidden, hidden).setOnes();
    dir_[d] = {&wx, &wh, &b};
  }
}

EncoderState BiLstm::forward(const std::vector<Mat>& xs, const Mat& mask) {
  if (xs.empty()) throw ShapeError("bilstm: empty sequence");
  for (const auto& x : xs) {
    if (x.rows() != input_width_) {
      throw ShapeError("bilstm: input width " + std::to_string(x.rows()) + " != " + std::to_string(input_width_));
    }
  }
  xs_ = xs;
  mask_ = mask;
  EncoderState state;
  run_direction(0, xs, mask, state.forward);
  run_direction(1, xs, mask, state.backward);
  return state;
}

void BiLstm::run_direction(int d, const std::vector<Mat>& xs, const Mat& mask, std::vector<Mat>& hs) {
  const int L = static_cast<int>(xs.size());
  const auto B = xs.front().cols();
  const int H = hidden_;
  const auto& wx = dir_[d].wx->value;
  const auto& wh = dir_[d].wh->value;
  const auto& bias = dir_[d].bias->value;
  auto& cache = cache_[d];
  cache.assign(L, {});
  hs.assign(L, Mat());
  Mat h = Mat::Zero(H, B);
  Mat c = Mat::Zero(H, B);
  for (int k = 0; k < L; ++k) {
    const int t = d == 0 ? k : L - 1 - k;
    auto& sc = cache[t];
    sc.h_prev = h;
    sc.c_prev = c;
    Mat z = wx * xs[t];
    z.noalias() += wh * h;
    z.colwise() += bias.col(0);
    sc.gates.resize(4 * H, B);
    sc.gates.topRows(3 * H) = sigmoid(z.topRows(3 * H));
    sc.gates.bottomRows(H) = z.bottomRows(H).array().tanh().matrix();
    const auto i = sc.gates.topRows(H).array();
    const auto f = sc.gates.middleRows(H, H).array();
    const auto o = sc.gates.middleRows(2 * H, H).array();
    const auto g = sc.gates.bottomRows(H).array();
    Mat c_new = (f * c.array() + i * g).matrix();
    Mat tc = c_new.array().tanh().matrix();
    Mat h_new = (o * tc.array()).matrix();
    if (mask.size() != 0) {
      for (Eigen::Index b = 0; b < B; ++b) {
        if (mask(t, b) == 0.0) {
          c_new.col(b) = c.col(b);
          h_new.col(b) = h.col(b);
        }
      }
    }
    sc.c = c_new;
    sc.tanh_c = std::move(tc);
    h = std::move(h_new);
    c = std::move(c_new);
    hs[t] = h;
  }
}

std::vector<Mat> BiLstm::backward(const std::vector<Mat>& d_forward, const std::vector<Mat>& d_backward) {
  const int L = static_cast<int>(xs_.size());
  if (static_cast<int>(d_forward.size()) != L || static_cast<int>(d_backward.size()) != L) {
    throw ShapeError("bilstm backward: gradient length mismatch");
  }
  std::vector<Mat> d_xs(L, Mat::Zero(input_width_, xs_.front().cols()));
  back_direction(0, d_forward, d_xs);
  back_direction(1, d_backward, d_xs);
  return d_xs;
}

void BiLstm::back_direction(int d, const std::vector<Mat>& d_h, std::vector<Mat>& d_xs) {
  const int L = static_cast<int>(xs_.size());
  const auto B = xs_.front().cols();
  const int H = hidden_;
  auto& dir = dir_[d];
  const auto& wx = dir.wx->value;
  const auto& wh = dir.wh->value;
  auto& cache = cache_[d];
  Mat dh_next = Mat::Zero(H, B);
  Mat dc_next = Mat::Zero(H, B);
  Mat dz(4 * H, B);
  for (int k = L - 1; k >= 0; --k) {
    const int t = d == 0 ? k : L - 1 - k;
    const auto& sc = cache[t];
    Mat dh = dh_next;
    if (d_h[t].size() != 0) dh += d_h[t];
    const auto i = sc.gates.topRows(H).array();
    const auto f = sc.gates.middleRows(H, H).array();
    const auto o = sc.gates.middleRows(2 * H, H).array();
    const auto g = sc.gates.bottomRows(H).array();
    const auto tc = sc.tanh_c.array();
    Mat dc = (dc_next.array() + dh.array() * o * (1.0 - tc * tc)).matrix();
    dz.topRows(H) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleRows(H, H) = (dc.array() * sc.c_prev.array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dz.bottomRows(H) = (dc.array() * i * (1.0 - g * g)).matrix();
    Mat dc_prev = (dc.array() * f).matrix();
    if (mask_.size() != 0) {
      for (Eigen::Index b = 0; b < B; ++b) {
        if (mask_(t, b) == 0.0) {
          dz.col(b).setZero();
          dc_prev.col(b) = dc_next.col(b);
        }
      }
    }
    dir.wx->grad.noalias() += dz * xs_[t].transpose();
    dir.wh->grad.noalias() += dz * sc.h_prev.transpose();
    dir.bias->grad.col(0) += dz.rowwise().sum();
    d_xs[t].noalias() += wx.transpose() * dz;
    Mat dh_prev = wh.transpose() * dz;
    if (mask_.size() != 0) {
      for (Eigen::Index b = 0; b < B; ++b) {
        if (mask_(t, b) == 0.0) dh_prev.col(b) = dh.col(b);
      }
    }
    dh_next = std::move(dh_prev);
    dc_next = std::move(dc_prev);
  }
}

}  // namespace icubench::nn
