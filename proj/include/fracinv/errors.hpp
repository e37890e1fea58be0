#ifndef FRACINV_ERRORS_HPP
#define FRACINV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fracinv
{
    /// Category of a failure, used by the CLI to pick exit codes and by the
    /// inversion pipeline to tag the stage that failed.
    enum class ErrorKind
    {
        parameter,
        range,
        domain,
        geometry,
        sampling,
        truncation,
        fit,
        near_singularity,
        estimation,
        identifiability,
        inconsistent,
        matching,
        config,
        io
    };

    inline const char* to_string(ErrorKind kind)
    {
        switch (kind)
        {
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::range: return "range";
        case ErrorKind::domain: return "domain";
        case ErrorKind::geometry: return "geometry";
        case ErrorKind::sampling: return "sampling";
        case ErrorKind::truncation: return "truncation";
        case ErrorKind::fit: return "fit";
        case ErrorKind::near_singularity: return "near_singularity";
        case ErrorKind::estimation: return "estimation";
        case ErrorKind::identifiability: return "identifiability";
        case ErrorKind::inconsistent: return "inconsistent";
        case ErrorKind::matching: return "matching";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
        }
        return "unknown";
    }

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorKind kind, const std::string& what, std::string stage = {})
            : std::runtime_error(what), kind_(kind), stage_(std::move(stage))
        {
        }

        ErrorKind kind() const noexcept { return kind_; }
        const std::string& stage() const noexcept { return stage_; }

        /// Copy of this error tagged with a pipeline stage name.
        Error with_stage(std::string stage) const { return Error(kind_, what(), std::move(stage)); }

    private:
        ErrorKind kind_;
        std::string stage_;
    };

    [[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
    {
        throw Error(kind, what);
    }

    inline void require(bool cond, ErrorKind kind, const std::string& what)
    {
        if (!cond)
            fail(kind, what);
    }
} // namespace fracinv

#endif
