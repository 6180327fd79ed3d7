#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rcess {

/// How much of the system the adversary controls: parties it can only
/// read, only jam, or both read and corrupt.
struct AdversaryCounts {
    std::uint32_t read_only = 0;   // z_ro
    std::uint32_t write_only = 0;  // z_wo
    std::uint32_t read_write = 0;  // z_rw

    std::uint32_t readers() const { return read_only + read_write; }
    std::uint32_t writers() const { return write_only + read_write; }

    bool operator==(const AdversaryCounts&) const = default;
};

enum class AdversaryModel { limited_knowledge, omniscient };

/// Positive capacity requires k > 2*z_rw + 2*z_wo + z_ro against a
/// limited-knowledge adversary and k > 3*z_rw + 2*z_wo + z_ro against an
/// omniscient one.
inline bool capacity_condition(std::uint32_t k, const AdversaryCounts& z, AdversaryModel model) {
    const std::uint64_t lhs = k;
    const std::uint64_t rhs = model == AdversaryModel::limited_knowledge
                                  ? 2ull * z.read_write + 2ull * z.write_only + z.read_only
                                  : 3ull * z.read_write + 2ull * z.write_only + z.read_only;
    return lhs > rhs;
}

inline std::string capacity_condition_text(AdversaryModel model) {
    return model == AdversaryModel::limited_knowledge
               ? "k > 2*z_rw + 2*z_wo + z_ro"
               : "k > 3*z_rw + 2*z_wo + z_ro";
}

} // namespace rcess
