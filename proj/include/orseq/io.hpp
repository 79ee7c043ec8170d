#ifndef ORSEQ_IO_HPP
#define ORSEQ_IO_HPP

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orseq/cache.hpp"
#include "orseq/limits.hpp"

namespace orseq {

inline constexpr const char* kToolVersion = "orseq 0.1.0";

// Header block prepended to every output file: tool version, verbatim config
// echo, content hash, wall clock.
struct OutputHeader {
    std::string config_echo;
    std::uint64_t content_hash = 0;

    std::string timestamp() const {
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    std::string csv_comment() const {
        std::ostringstream os;
        os << "# tool: " << kToolVersion << "\n";
        os << "# config: " << config_echo << "\n";
        os << "# content_hash: " << std::hex << content_hash << std::dec << "\n";
        os << "# wall_clock: " << timestamp() << "\n";
        return os.str();
    }

    nlohmann::json json() const {
        return {{"tool", kToolVersion},
                {"config", config_echo},
                {"content_hash", content_hash},
                {"wall_clock", timestamp()}};
    }
};

inline nlohmann::json report_json(const VerifierReport& rep) {
    return {{"statement_id", rep.statement_id},
            {"beta", rep.beta},
            {"alpha", rep.alpha},
            {"n_checkpoints", rep.checkpoints},
            {"values", rep.values},
            {"target", rep.target},
            {"deviations", rep.deviations},
            {"trend", rep.trend},
            {"pass", rep.pass}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open output file: " + path);
    out << text;
}

// CSV series dump: documented columns, header block first.
inline void write_series_csv(const std::string& path, const OutputHeader& hdr,
                             const std::string& columns,
                             const std::vector<std::vector<Real>>& rows) {
    std::ostringstream os;
    os << hdr.csv_comment() << columns << "\n";
    os.setf(std::ios::scientific);
    os.precision(17);
    for (const auto& r : rows) {
        for (size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << r[j];
        os << "\n";
    }
    write_text(path, os.str());
}

}  // namespace orseq

#endif
