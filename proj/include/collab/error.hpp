#pragma once

#include <stdexcept>
#include <string>

namespace collab {

// Base for every error the engine raises. Stage wrappers and the CLI catch
// this type and map subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define COLLAB_DEFINE_ERROR(Name)          \
    class Name : public Error {            \
    public:                                \
        using Error::Error;                \
    }

// core / ingest
COLLAB_DEFINE_ERROR(GeometryError);
COLLAB_DEFINE_ERROR(PointOutsideFrame);
COLLAB_DEFINE_ERROR(SchemaError);

// backends
COLLAB_DEFINE_ERROR(EmptyCategory);
COLLAB_DEFINE_ERROR(EmptyCandidates);
COLLAB_DEFINE_ERROR(KindMismatch);
COLLAB_DEFINE_ERROR(FileNotFound);
COLLAB_DEFINE_ERROR(DecodeError);

// cmmi
COLLAB_DEFINE_ERROR(AllBackendsFailed);
COLLAB_DEFINE_ERROR(NoCandidates);
COLLAB_DEFINE_ERROR(MergeFailed);

// spa
COLLAB_DEFINE_ERROR(MixedImages);

// stats
COLLAB_DEFINE_ERROR(EmptyCorpus);
COLLAB_DEFINE_ERROR(NonPositiveLatency);

// export
COLLAB_DEFINE_ERROR(UniquenessViolation);
COLLAB_DEFINE_ERROR(IoError);

// cli
COLLAB_DEFINE_ERROR(ConfigError);

#undef COLLAB_DEFINE_ERROR

class TimeoutError : public Error {
public:
    TimeoutError(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// Raised once retries are exhausted. status is 0 when no HTTP response was
// received at all (connection refused, DNS failure, ...).
class RemoteError : public Error {
public:
    RemoteError(int status, std::string body, int attempts)
        : Error("remote error: status " + std::to_string(status) + " after " + std::to_string(attempts) +
                " attempt(s): " + body),
          status_(status),
          body_(std::move(body)),
          attempts_(attempts) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }
    int attempts() const noexcept { return attempts_; }

private:
    int status_;
    std::string body_;
    int attempts_;
};

// Wraps a failure with the pipeline stage and instance that produced it.
class StageError : public Error {
public:
    StageError(std::string stage, std::string instance_id, const std::string& cause)
        : Error("[" + stage + (instance_id.empty() ? "" : " " + instance_id) + "] " + cause),
          stage_(std::move(stage)),
          instance_id_(std::move(instance_id)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& instance_id() const noexcept { return instance_id_; }

private:
    std::string stage_;
    std::string instance_id_;
};

}  // namespace collab
