#include "mfctrl/environment.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <unsupported/Eigen/AutoDiff>

#include "mfctrl/errors.hpp"

namespace mfctrl {

void EnvironmentSpec::Validate() const {
  if (name.empty()) throw ContractViolation("environment: empty name");
  if (n_x < 1 || n_u < 1) throw ContractViolation(name + ": n_x, n_u must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractViolation(name + ": dt must be > 0");
  if (horizon < 1) throw ContractViolation(name + ": horizon must be >= 1");
  if (control_lower.size() != n_u || control_upper.size() != n_u) {
    throw ContractViolation(name + ": control bounds must have n_u entries");
  }
  for (int i = 0; i < n_u; ++i) {
    if (!(control_lower[i] < control_upper[i])) {
      throw ContractViolation(name + ": control bound " + std::to_string(i) +
                              " needs lo < hi");
    }
  }
  if (initial_state.size() != n_x || goal_state.size() != n_x) {
    throw ContractViolation(name + ": initial/goal state must have n_x entries");
  }
  if (!initial_state.allFinite() || !goal_state.allFinite()) {
    throw ContractViolation(name + ": initial/goal state not finite");
  }
}

Environment::Environment(EnvironmentSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
}

StateVector Environment::Step(const StateVector& x, const ControlVector& u) const {
  if (x.size() != spec_.n_x || u.size() != spec_.n_u) {
    throw ContractViolation(spec_.name + ": step dimension mismatch (x " +
                            std::to_string(x.size()) + ", u " +
                            std::to_string(u.size()) + ")");
  }
  if (!x.allFinite() || !u.allFinite()) {
    throw ContractViolation(spec_.name + ": step input not finite");
  }
  return Propagate(x, Clamp(u));
}

ControlVector Environment::Clamp(const ControlVector& u) const {
  return u.cwiseMax(spec_.control_lower).cwiseMin(spec_.control_upper);
}

ControlVector Environment::ControlHalfRange() const {
  return 0.5 * (spec_.control_upper - spec_.control_lower);
}

std::optional<JacobianPair> Environment::ReferenceJacobian(
    const StateVector&, const ControlVector&) const {
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Linear

LinearEnvironment::LinearEnvironment(EnvironmentSpec spec, Matrix a, Matrix b)
    : Environment(std::move(spec)), a_(std::move(a)), b_(std::move(b)) {
  const int nx = state_dim();
  if (a_.rows() != nx || a_.cols() != nx || b_.rows() != nx ||
      b_.cols() != control_dim()) {
    throw ContractViolation(name() + ": A/B dimensions do not match n_x, n_u");
  }
}

StateVector LinearEnvironment::Propagate(const StateVector& x,
                                         const ControlVector& u) const {
  return a_ * x + b_ * u;
}

std::optional<JacobianPair> LinearEnvironment::ReferenceJacobian(
    const StateVector&, const ControlVector&) const {
  return JacobianPair{a_, b_};
}

std::shared_ptr<const LinearEnvironment> MakeLinearTest(int horizon) {
  EnvironmentSpec spec;
  spec.name = "linear_test";
  spec.n_x = 2;
  spec.n_u = 1;
  spec.dt = 0.1;
  spec.horizon = horizon;
  spec.control_lower = ControlVector::Constant(1, -10.0);
  spec.control_upper = ControlVector::Constant(1, 10.0);
  spec.initial_state = StateVector(2);
  spec.initial_state << 1.0, 0.0;
  spec.goal_state = StateVector::Zero(2);
  Matrix a(2, 2);
  a << 1.0, 0.1, 0.0, 1.0;
  Matrix b(2, 1);
  b << 0.0, 0.1;
  return std::make_shared<LinearEnvironment>(std::move(spec), std::move(a),
                                             std::move(b));
}

// ---------------------------------------------------------------------------
// RK4 over templated vector fields, so the same code serves double and
// forward-mode AutoDiff scalars.

namespace {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar, typename Field>
Vec<Scalar> Rk4(const Field& field, Vec<Scalar> x, const Vec<Scalar>& u,
                double dt, int substeps) {
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Vec<Scalar> k1 = field(x, u);
    const Vec<Scalar> k2 = field(Vec<Scalar>(x + (0.5 * h) * k1), u);
    const Vec<Scalar> k3 = field(Vec<Scalar>(x + (0.5 * h) * k2), u);
    const Vec<Scalar> k4 = field(Vec<Scalar>(x + h * k3), u);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

template <typename Scalar>
struct PendulumField {
  const PendulumParams& p;
  Vec<Scalar> operator()(const Vec<Scalar>& x, const Vec<Scalar>& u) const {
    using std::sin;
    const double inertia = p.mass * p.length * p.length;
    Vec<Scalar> dx(2);
    dx[0] = x[1];
    dx[1] = (u[0] - p.damping * x[1] -
             p.mass * p.gravity * p.length * sin(x[0])) /
            inertia;
    return dx;
  }
};

// Uniform rod of length 2l pinned to the cart; Lagrangian equations solved
// as a 2x2 linear system for (p_ddot, theta_ddot).
template <typename Scalar>
struct CartPoleField {
  const CartPoleParams& p;
  Vec<Scalar> operator()(const Vec<Scalar>& x, const Vec<Scalar>& u) const {
    using std::cos;
    using std::sin;
    const double m = p.pole_mass;
    const double l = p.pole_half_length;
    const double total = p.cart_mass + m;
    const double pole_inertia = 4.0 / 3.0 * m * l * l;  // about the pivot
    const Scalar s = sin(x[1]);
    const Scalar c = cos(x[1]);
    const Scalar coupling = m * l * c;
    const Scalar rhs_cart = u[0] + m * l * s * x[3] * x[3];
    const Scalar rhs_pole = -m * p.gravity * l * s;
    const Scalar det = total * pole_inertia - coupling * coupling;
    Vec<Scalar> dx(4);
    dx[0] = x[2];
    dx[1] = x[3];
    dx[2] = (pole_inertia * rhs_cart - coupling * rhs_pole) / det;
    dx[3] = (total * rhs_pole - coupling * rhs_cart) / det;
    return dx;
  }
};

using AdScalar = Eigen::AutoDiffScalar<Eigen::VectorXd>;

template <template <typename> class Field, typename Params>
JacobianPair AutoDiffJacobian(const Params& params, const StateVector& x,
                              const ControlVector& u) {
  const int nx = static_cast<int>(x.size());
  const int nu = static_cast<int>(u.size());
  const int n = nx + nu;
  Vec<AdScalar> ax(nx);
  Vec<AdScalar> au(nu);
  for (int i = 0; i < nx; ++i) {
    ax[i] = AdScalar(x[i], n, i);
  }
  for (int j = 0; j < nu; ++j) {
    au[j] = AdScalar(u[j], n, nx + j);
  }
  const Vec<AdScalar> next = Rk4<AdScalar>(Field<AdScalar>{params}, ax, au,
                                           params.dt, params.substeps);
  JacobianPair jac{Matrix(nx, nx), Matrix(nx, nu)};
  for (int r = 0; r < nx; ++r) {
    const Eigen::VectorXd& d = next[r].derivatives();
    jac.A.row(r) = d.head(nx).transpose();
    jac.B.row(r) = d.tail(nu).transpose();
  }
  return jac;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pendulum

namespace {
EnvironmentSpec PendulumSpec(const PendulumParams& p) {
  if (!(p.mass > 0) || !(p.length > 0) || p.damping < 0 || !(p.torque_limit > 0) ||
      p.substeps < 1) {
    throw ContractViolation("pendulum: invalid physical parameters");
  }
  EnvironmentSpec spec;
  spec.name = "pendulum";
  spec.n_x = 2;
  spec.n_u = 1;
  spec.dt = p.dt;
  spec.horizon = p.horizon;
  spec.control_lower = ControlVector::Constant(1, -p.torque_limit);
  spec.control_upper = ControlVector::Constant(1, p.torque_limit);
  spec.initial_state = StateVector::Zero(2);
  spec.goal_state = StateVector(2);
  spec.goal_state << M_PI, 0.0;
  return spec;
}
}  // namespace

PendulumEnvironment::PendulumEnvironment(const PendulumParams& params)
    : Environment(PendulumSpec(params)), params_(params) {}

StateVector PendulumEnvironment::Propagate(const StateVector& x,
                                           const ControlVector& u) const {
  return Rk4<double>(PendulumField<double>{params_}, x, u, params_.dt,
                     params_.substeps);
}

double PendulumEnvironment::Energy(const StateVector& x) const {
  const double ml = params_.mass * params_.length;
  return 0.5 * ml * params_.length * x[1] * x[1] -
         ml * params_.gravity * std::cos(x[0]);
}

std::optional<JacobianPair> PendulumEnvironment::ReferenceJacobian(
    const StateVector& x, const ControlVector& u) const {
  return AutoDiffJacobian<PendulumField>(params_, x, u);
}

// ---------------------------------------------------------------------------
// Cart-pole

namespace {
EnvironmentSpec CartPoleSpec(const CartPoleParams& p) {
  if (!(p.cart_mass > 0) || !(p.pole_mass > 0) || !(p.pole_half_length > 0) ||
      !(p.force_limit > 0) || p.substeps < 1) {
    throw ContractViolation("cartpole: invalid physical parameters");
  }
  EnvironmentSpec spec;
  spec.name = "cartpole";
  spec.n_x = 4;
  spec.n_u = 1;
  spec.dt = p.dt;
  spec.horizon = p.horizon;
  spec.control_lower = ControlVector::Constant(1, -p.force_limit);
  spec.control_upper = ControlVector::Constant(1, p.force_limit);
  spec.initial_state = StateVector::Zero(4);
  spec.goal_state = StateVector(4);
  spec.goal_state << 0.0, M_PI, 0.0, 0.0;
  return spec;
}
}  // namespace

CartPoleEnvironment::CartPoleEnvironment(const CartPoleParams& params)
    : Environment(CartPoleSpec(params)), params_(params) {}

StateVector CartPoleEnvironment::Propagate(const StateVector& x,
                                           const ControlVector& u) const {
  return Rk4<double>(CartPoleField<double>{params_}, x, u, params_.dt,
                     params_.substeps);
}

std::optional<JacobianPair> CartPoleEnvironment::ReferenceJacobian(
    const StateVector& x, const ControlVector& u) const {
  return AutoDiffJacobian<CartPoleField>(params_, x, u);
}

// ---------------------------------------------------------------------------

CountingEnvironment::CountingEnvironment(EnvironmentPtr inner)
    : Environment(inner->spec()), inner_(std::move(inner)) {}

StateVector CountingEnvironment::Propagate(const StateVector& x,
                                           const ControlVector& u) const {
  count_.fetch_add(1, std::memory_order_relaxed);
  return inner_->Step(x, u);
}

std::optional<JacobianPair> CountingEnvironment::ReferenceJacobian(
    const StateVector& x, const ControlVector& u) const {
  return inner_->ReferenceJacobian(x, u);
}

}  // namespace mfctrl
