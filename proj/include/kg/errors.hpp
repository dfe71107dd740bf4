#pragma once

#include <stdexcept>
#include <string>

namespace kg {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: shape mismatches, out-of-domain parameters, broken invariants.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An operation's documented precondition does not hold (e.g. a directed kernel
/// passed where an undirected one is required).
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class EigenSolverFailure : public Error {
 public:
  using Error::Error;
};

/// 1 lies in the spectrum of the payoff operator, so the mean equation has no
/// unique solution.
class SingularMeanEquation : public Error {
 public:
  using Error::Error;
};

class SingularSignalCov : public Error {
 public:
  using Error::Error;
};

/// Fixed-point iteration hit its cap or diverged.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// The assembled coefficient system of the linear equilibrium is singular.
class SingularEquilibriumSystem : public Error {
 public:
  using Error::Error;
};

class InfeasibleMoment : public Error {
 public:
  using Error::Error;
};

class NoRealEigenvalueAtLeastOne : public Error {
 public:
  using Error::Error;
};

}  // namespace kg
