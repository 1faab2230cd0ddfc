#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iuprobe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input violated a documented precondition (bad config, malformed file in strict mode, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A referenced entity (user, seed, feature) does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The data cannot support the requested computation (all values tied, one class only, ...).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// Collects non-fatal warnings emitted while processing.
class Diagnostics {
public:
    void warn(std::string message) { messages_.push_back(std::move(message)); }
    const std::vector<std::string>& messages() const noexcept { return messages_; }
    std::size_t count() const noexcept { return messages_.size(); }
    bool empty() const noexcept { return messages_.empty(); }
    void merge(const Diagnostics& other) {
        messages_.insert(messages_.end(), other.messages_.begin(), other.messages_.end());
    }

private:
    std::vector<std::string> messages_;
};

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

/// Parses `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]`.
/// Throws ValidationError on anything else.
Timestamp parse_iso8601(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(Timestamp ts);

/// Days since the epoch of the UTC calendar date containing `ts`.
std::int64_t utc_day(Timestamp ts) noexcept;

/// 64-bit FNV-1a; used for provenance digests and deterministic jitter.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

std::string to_hex(std::uint64_t value);

/// SplitMix64 finalizer, used to derive independent child seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Shortest round-trip decimal form of a double ("%.17g" trimmed), stable across runs.
std::string format_double(double value);

/// Fixed-precision formatting for human-facing tables.
std::string format_fixed(double value, int digits);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string to_lower_ascii(std::string_view text);

}  // namespace iuprobe
