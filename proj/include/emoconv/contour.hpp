// emoconv/contour.hpp

// Copyright 2026  The emoconv authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOCONV_CONTOUR_HPP_
#define EMOCONV_CONTOUR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "emoconv/errors.hpp"
#include "emoconv/feature_io.hpp"

namespace emoconv {

/// Per-frame fundamental frequency in Hz with a voiced mask. In raw form a
/// frame is unvoiced iff its value is exactly 0; interpolate_unvoiced() yields
/// the all-positive form used by registration.
struct F0Contour {
  std::vector<double> values;  // Hz, >= 0
  std::vector<bool> voiced;
  double frame_step_ms = 5.0;

  std::size_t size() const { return values.size(); }

  static F0Contour from_values(std::vector<double> v, double frame_step = 5.0) {
    F0Contour c;
    c.voiced.resize(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) c.voiced[t] = v[t] != 0.0;
    c.values = std::move(v);
    c.frame_step_ms = frame_step;
    return c;
  }

  void validate() const {
    if (values.empty() || values.size() != voiced.size())
      throw ShapeError("F0 contour: values length " +
                       std::to_string(values.size()) + " vs mask length " +
                       std::to_string(voiced.size()));
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (!std::isfinite(values[t]) || values[t] < 0.0)
        throw NumericError("F0 contour: bad value at frame " +
                           std::to_string(t));
      if ((values[t] == 0.0) == voiced[t])
        throw NumericError("F0 contour: voicing mask disagrees with value at "
                           "frame " + std::to_string(t));
    }
  }
};

/// T x D per-frame spectral coefficients (23-dimensional MFCC-like vectors).
struct SpectralFrames {
  std::size_t dim = 23;
  std::vector<double> data;  // row-major, frames() x dim

  std::size_t frames() const { return dim == 0 ? 0 : data.size() / dim; }
  double& at(std::size_t t, std::size_t d) { return data[t * dim + d]; }
  double at(std::size_t t, std::size_t d) const { return data[t * dim + d]; }
};

/// Initial momenta; same length as the F0 contour they deform.
struct Momenta {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  void validate() const {
    for (std::size_t t = 0; t < values.size(); ++t)
      if (!std::isfinite(values[t]))
        throw NumericError("momenta: non-finite value at frame " +
                           std::to_string(t));
  }
};

inline FeatureMatrix to_matrix(const F0Contour& c) {
  FeatureMatrix m;
  m.rows = static_cast<std::uint32_t>(c.size());
  m.cols = 1;
  m.data = c.values;
  return m;
}

inline F0Contour contour_from_matrix(const FeatureMatrix& m,
                                     double frame_step_ms = 5.0) {
  if (m.cols != 1)
    throw ShapeError("expected a rows x 1 matrix for an F0 contour, got " +
                     std::to_string(m.rows) + "x" + std::to_string(m.cols));
  return F0Contour::from_values(m.data, frame_step_ms);
}

inline FeatureMatrix to_matrix(const SpectralFrames& s) {
  FeatureMatrix m;
  m.rows = static_cast<std::uint32_t>(s.frames());
  m.cols = static_cast<std::uint32_t>(s.dim);
  m.data = s.data;
  return m;
}

inline SpectralFrames spectral_from_matrix(const FeatureMatrix& m) {
  SpectralFrames s;
  s.dim = m.cols;
  s.data = m.data;
  return s;
}

inline FeatureMatrix to_matrix(const Momenta& mo) {
  FeatureMatrix m;
  m.rows = static_cast<std::uint32_t>(mo.size());
  m.cols = 1;
  m.data = mo.values;
  return m;
}

inline Momenta momenta_from_matrix(const FeatureMatrix& m) {
  if (m.cols != 1)
    throw ShapeError("expected a rows x 1 matrix for momenta, got " +
                     std::to_string(m.rows) + "x" + std::to_string(m.cols));
  return Momenta{m.data};
}

/// Linear interpolation through unvoiced (zero) frames, edge-held at the
/// boundaries. Result has every frame voiced and positive. A contour with no
/// voiced frame at all cannot be interpolated.
inline F0Contour interpolate_unvoiced(const F0Contour& c) {
  c.validate();
  const std::size_t n = c.size();
  F0Contour out = c;
  std::vector<std::size_t> anchors;
  for (std::size_t t = 0; t < n; ++t)
    if (c.voiced[t]) anchors.push_back(t);
  if (anchors.empty())
    throw DegenerateInputError("contour has no voiced frame to interpolate "
                               "from");
  for (std::size_t t = 0; t < anchors.front(); ++t)
    out.values[t] = c.values[anchors.front()];
  for (std::size_t t = anchors.back() + 1; t < n; ++t)
    out.values[t] = c.values[anchors.back()];
  for (std::size_t k = 0; k + 1 < anchors.size(); ++k) {
    const std::size_t a = anchors[k], b = anchors[k + 1];
    for (std::size_t t = a + 1; t < b; ++t) {
      const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
      out.values[t] = (1.0 - w) * c.values[a] + w * c.values[b];
    }
  }
  std::fill(out.voiced.begin(), out.voiced.end(), true);
  return out;
}

struct WindowSpan {
  std::size_t start;
  std::size_t length;
};

/// Fixed-length context windows: aligned starts 0, hop, 2*hop, ... while they
/// fit, plus one right-aligned tail window when the last aligned window does
/// not end at T. Every frame is covered by at least one window.
inline std::vector<WindowSpan> window_starts(std::size_t total_frames,
                                             std::size_t context,
                                             std::size_t hop) {
  if (context < 1 || hop < 1)
    throw ConfigError("window context and hop must be >= 1");
  if (total_frames < context)
    throw DegenerateInputError(
        "input too short: " + std::to_string(total_frames) +
        " frames < context " + std::to_string(context));
  std::vector<WindowSpan> spans;
  std::size_t start = 0;
  for (; start + context <= total_frames; start += hop)
    spans.push_back({start, context});
  const std::size_t last_end = spans.back().start + context;
  if (last_end != total_frames)
    spans.push_back({total_frames - context, context});
  return spans;
}

struct FeatureWindow {
  std::size_t start = 0;
  F0Contour f0;
  SpectralFrames spectrum;
};

/// Cuts a paired (F0, spectrum) utterance into aligned context windows.
inline std::vector<FeatureWindow> window_contexts(const F0Contour& f0,
                                                  const SpectralFrames& spec,
                                                  std::size_t context,
                                                  std::size_t hop) {
  if (f0.size() != spec.frames())
    throw ShapeError("F0 length " + std::to_string(f0.size()) +
                     " vs spectral frames " + std::to_string(spec.frames()));
  std::vector<FeatureWindow> windows;
  for (const WindowSpan& span : window_starts(f0.size(), context, hop)) {
    FeatureWindow w;
    w.start = span.start;
    w.f0.frame_step_ms = f0.frame_step_ms;
    w.f0.values.assign(f0.values.begin() + span.start,
                       f0.values.begin() + span.start + span.length);
    w.f0.voiced.assign(f0.voiced.begin() + span.start,
                       f0.voiced.begin() + span.start + span.length);
    w.spectrum.dim = spec.dim;
    w.spectrum.data.assign(
        spec.data.begin() + span.start * spec.dim,
        spec.data.begin() + (span.start + span.length) * spec.dim);
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace emoconv

#endif  // EMOCONV_CONTOUR_HPP_
