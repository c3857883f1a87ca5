#pragma once

// Lower-level pieces of the forward pass, shared by training (which needs the
// intermediate values for back-propagation) and evaluation (which only reads
// a few output coordinates).

#include <span>

#include "cranet/model.h"

namespace cranet {

struct EncoderState {
  double phi = 0.0;
  DenseVector s;       // V·R
  DenseVector reflected;  // R̂ (tied / independent)
  DenseVector input;   // R̃ (tied / independent) or the dense input (plain)
  DenseVector z;       // pre-activation
  DenseVector h;       // g(z)
  bool dense = false;  // `input` holds the encoder input
};

// `dense_input` is only meaningful in plain mode; pass nullptr otherwise.
void encode(const ModelParams& p, const HyperParams& hp, const SparseVector& r,
            const DenseVector* dense_input, EncoderState& st);

// Output coordinate i: W[i,:]·h + b[i] (+ R[i] with the residual flag).
inline double decode_at(const ModelParams& p, std::span<const double> h, std::size_t i) {
  const double* w = p.W.data() + i * p.W.cols();
  double acc = 0.0;
  for (std::size_t a = 0; a < h.size(); ++a) acc += w[a] * h[a];
  return acc + p.b[i];
}

// Accumulates ∂/∂θ of a scalar whose gradient w.r.t. the pre-activation z is
// `delta_z` into `grads` (every encoder path, not the decoder).
void backward_encoder(const ModelParams& p, const SparseVector& r, const EncoderState& st,
                      const DenseVector& delta_z, ModelParams& grads);

}  // namespace cranet
