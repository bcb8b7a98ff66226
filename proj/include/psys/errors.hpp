#pragma once

#include <stdexcept>
#include <string>

namespace psys {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InadmissibleOrientation : public DomainError {
public:
    using DomainError::DomainError;
};

/// Raised when a wave-curve operation would produce a density at or below the floor.
class VacuumFormation : public Error {
public:
    VacuumFormation(const std::string& what, double rho_limit)
        : Error(what), rho_limit_(rho_limit) {}
    double rho_limit() const { return rho_limit_; }

private:
    double rho_limit_;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

/// Left-state construction hypothesis failure; `margin` is rho2* - rho2 for hypothesis (ii), NaN for (i).
class HypothesisViolation : public Error {
public:
    HypothesisViolation(const std::string& what, double margin)
        : Error(what), margin_(margin) {}
    double margin() const { return margin_; }

private:
    double margin_;
};

class ScheduleInfeasible : public Error {
public:
    ScheduleInfeasible(const std::string& constraint, const std::string& detail)
        : Error(constraint + ": " + detail), constraint_(constraint) {}
    const std::string& constraint() const { return constraint_; }

private:
    std::string constraint_;
};

class InfeasibleTarget : public ScheduleInfeasible {
public:
    using ScheduleInfeasible::ScheduleInfeasible;
};

}  // namespace psys
