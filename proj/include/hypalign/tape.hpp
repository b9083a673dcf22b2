#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypalign {

/// Thrown when an expression produces a non-finite intermediate; the message
/// names the primitive that produced it.
class GradError : public std::runtime_error {
public:
  explicit GradError(const std::string& what) : std::runtime_error(what) {}
};

class Tape;

/// A scalar value recorded on a tape. Cheap to copy; the value is cached so
/// forward arithmetic never re-reads the tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  double val = 0.0;

  double value() const { return val; }
};

/// Reverse-mode tape over scalar primitives. Nodes are stored in evaluation
/// order; the backward sweep walks them in strict reverse index order, so
/// gradients are bit-for-bit reproducible for a fixed expression.
class Tape {
public:
  struct Node {
    double w0, w1;
    int p0, p1;
  };

  Var input(double v) { return make("input", v, -1, 0.0, -1, 0.0); }
  Var constant(double v) { return make("constant", v, -1, 0.0, -1, 0.0); }

  Var make(const char* op, double val, int p0, double w0, int p1, double w1) {
    if (!std::isfinite(val)) {
      throw GradError(std::string("non-finite value produced by primitive '") +
                      op + "'");
    }
    nodes_.push_back(Node{w0, w1, p0, p1});
    return Var{this, static_cast<int>(nodes_.size()) - 1, val};
  }

  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Adjoints of every node with respect to `root`, computed in reverse
  /// recording order.
  std::vector<double> gradient(const Var& root) const {
    if (root.tape != this || root.id < 0)
      throw std::invalid_argument("gradient root does not belong to this tape");
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[root.id] = 1.0;
    for (int i = root.id; i >= 0; --i) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& nd = nodes_[i];
      if (nd.p0 >= 0) adj[nd.p0] += nd.w0 * a;
      if (nd.p1 >= 0) adj[nd.p1] += nd.w1 * a;
    }
    return adj;
  }

private:
  std::vector<Node> nodes_;
};

inline Tape* tape_of(const Var& a, const Var& b) {
  Tape* t = a.tape ? a.tape : b.tape;
  if (a.tape && b.tape && a.tape != b.tape)
    throw std::invalid_argument("operands recorded on different tapes");
  return t;
}

// ---- arithmetic -----------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  return tape_of(a, b)->make("add", a.val + b.val, a.id, 1.0, b.id, 1.0);
}
inline Var operator+(const Var& a, double c) {
  return a.tape->make("add", a.val + c, a.id, 1.0, -1, 0.0);
}
inline Var operator+(double c, const Var& a) { return a + c; }

inline Var operator-(const Var& a, const Var& b) {
  return tape_of(a, b)->make("sub", a.val - b.val, a.id, 1.0, b.id, -1.0);
}
inline Var operator-(const Var& a, double c) {
  return a.tape->make("sub", a.val - c, a.id, 1.0, -1, 0.0);
}
inline Var operator-(double c, const Var& a) {
  return a.tape->make("sub", c - a.val, a.id, -1.0, -1, 0.0);
}
inline Var operator-(const Var& a) {
  return a.tape->make("neg", -a.val, a.id, -1.0, -1, 0.0);
}

inline Var operator*(const Var& a, const Var& b) {
  return tape_of(a, b)->make("mul", a.val * b.val, a.id, b.val, b.id, a.val);
}
inline Var operator*(const Var& a, double c) {
  return a.tape->make("mul", a.val * c, a.id, c, -1, 0.0);
}
inline Var operator*(double c, const Var& a) { return a * c; }

inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.val;
  return tape_of(a, b)->make("div", a.val * inv, a.id, inv, b.id,
                             -a.val * inv * inv);
}
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, const Var& b) {
  const double inv = 1.0 / b.val;
  return b.tape->make("div", c * inv, b.id, -c * inv * inv, -1, 0.0);
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator+=(Var& a, double c) { return a = a + c; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, double c) { return a = a * c; }

// ---- elementary functions -------------------------------------------------

inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.val);
  return a.tape->make("sqrt", s, a.id, 0.5 / s, -1, 0.0);
}
inline Var exp(const Var& a) {
  const double e = std::exp(a.val);
  return a.tape->make("exp", e, a.id, e, -1, 0.0);
}
inline Var log(const Var& a) {
  return a.tape->make("log", std::log(a.val), a.id, 1.0 / a.val, -1, 0.0);
}
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.val);
  return a.tape->make("tanh", t, a.id, 1.0 - t * t, -1, 0.0);
}
inline Var atanh(const Var& a) {
  return a.tape->make("atanh", std::atanh(a.val), a.id,
                      1.0 / (1.0 - a.val * a.val), -1, 0.0);
}
inline Var acosh(const Var& a) {
  return a.tape->make("acosh", std::acosh(a.val), a.id,
                      1.0 / std::sqrt(a.val * a.val - 1.0), -1, 0.0);
}
// |x| with subgradient 0 at the origin.
inline Var abs(const Var& a) {
  const double w = a.val > 0.0 ? 1.0 : (a.val < 0.0 ? -1.0 : 0.0);
  return a.tape->make("abs", std::fabs(a.val), a.id, w, -1, 0.0);
}
// max(0, x) with subgradient 0 at the kink.
inline Var relu(const Var& a) {
  const double w = a.val > 0.0 ? 1.0 : 0.0;
  return a.tape->make("relu", a.val > 0.0 ? a.val : 0.0, a.id, w, -1, 0.0);
}

// ---- generic scalar helpers (shared with plain double code paths) ---------

// Make the std overloads visible next to the Var ones so templates over
// T in {double, Var} can call these unqualified.
using std::abs;
using std::acosh;
using std::atanh;
using std::exp;
using std::log;
using std::sqrt;
using std::tanh;

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& v) { return v.val; }

inline std::vector<Var> make_inputs(Tape& t, std::span<const double> xs) {
  std::vector<Var> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(t.input(x));
  return out;
}
inline std::vector<Var> make_constants(Tape& t, std::span<const double> xs) {
  std::vector<Var> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(t.constant(x));
  return out;
}

// ---- gradient evaluation and checking --------------------------------------

struct GradientReport {
  double loss = 0.0;
  std::vector<double> grads;  // one entry per input coordinate
};

/// Records `build(tape, inputs)` and returns the loss with exact reverse-mode
/// gradients with respect to every input coordinate.
GradientReport evaluate_with_gradients(
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    std::span<const double> x);

struct FiniteDiffReport {
  bool pass = true;
  double max_rel_err = 0.0;
  std::vector<int> failing;   // coordinates exceeding tolerance
  std::vector<int> excluded;  // non-differentiable points (one-sided slopes disagree)
};

/// Central-difference check of `analytic_grad` against `f` at `x`.
/// Coordinates where the one-sided slopes disagree (hinge kinks and the like)
/// are excluded rather than failed.
FiniteDiffReport finite_diff_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic_grad,
    double step, double tolerance);

/// Convenience: builds the expression, takes its exact gradients, and checks
/// them against central differences.
FiniteDiffReport finite_diff_check(
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    std::span<const double> x, double step, double tolerance);

}  // namespace hypalign
