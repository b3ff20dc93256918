// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lfedit {

/// A caller violated an operation's precondition: bad shapes, grids that do
/// not match a checkpoint, out-of-range indices. The CLI maps it to exit 2.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Filesystem or container failure (missing files, corrupt manifests).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A light field directory is missing one view.
class MissingViewError : public IoError {
 public:
  MissingViewError(int v, int u, const std::string& path)
      : IoError("missing view (" + std::to_string(v) + "," + std::to_string(u) + "): " + path),
        v_(v), u_(u) {}
  int v() const { return v_; }
  int u() const { return u_; }

 private:
  int v_, u_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

}  // namespace lfedit
