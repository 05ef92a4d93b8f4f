#ifndef WMIPFV_ERRORS_HPP
#define WMIPFV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wmipfv {

/** Base class of every error raised by the library. */
class Error : public std::runtime_error
{
    public:
        explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/** Interval formula with lower endpoint above the upper one. */
class EmptyIntervalError : public Error
{
    public:
        explicit EmptyIntervalError(const std::string& what) : Error(what) {}
};

/** An integration region (or a variable of it) is not bounded. */
class UnboundedRegionError : public Error
{
    public:
        explicit UnboundedRegionError(const std::string& what) : Error(what) {}
};

/** A weight condition is left undetermined by a truth assignment. */
class IncompleteAssignmentError : public Error
{
    public:
        explicit IncompleteAssignmentError(const std::string& what) : Error(what) {}
};

/** Conditioning on an event of zero weighted measure. */
class NullConditioningError : public Error
{
    public:
        explicit NullConditioningError(const std::string& what) : Error(what) {}
};

/**
 * An auxiliary (defined) real variable is not fixed by the equalities of an
 * assignment, so the integration domain is ill-posed.
 */
class NotDeterminedError : public Error
{
    public:
        explicit NotDeterminedError(const std::string& what) : Error(what) {}
};

/** Malformed text, JSON or CSV input. Carries a location when available. */
class ParseError : public Error
{
    public:
        explicit ParseError(const std::string& what) : Error(what) {}
};

/** A model violates a structural requirement (shapes, volumes, normalization). */
class ModelError : public Error
{
    public:
        explicit ModelError(const std::string& what) : Error(what) {}
};

/** Inputs of different arity or sort were combined. */
class ArityError : public Error
{
    public:
        explicit ArityError(const std::string& what) : Error(what) {}
};

/** Requested option is not supported. */
class UnsupportedError : public Error
{
    public:
        explicit UnsupportedError(const std::string& what) : Error(what) {}
};

/** A precondition has no solution. */
class UnsatisfiableError : public Error
{
    public:
        explicit UnsatisfiableError(const std::string& what) : Error(what) {}
};

} // namespace wmipfv

#endif
