#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bmo {

// One verdict line: a measured quantity against its predicted value or
// bound. `anchor` names the inequality or identity being exercised.
struct CheckRecord {
    std::string name;
    std::string anchor;
    double measured = 0.0;
    double predicted = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct VerdictReport {
    std::string experiment;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    int steps = 0;
    long long paths = 0;
    std::vector<CheckRecord> records;

    bool overall() const;

    // measured within tolerance of predicted (absolute).
    CheckRecord& add_close(const std::string& name, const std::string& anchor, double measured,
                           double predicted, double tolerance, const std::string& note = "");
    // measured <= bound (strict domination, no slack).
    CheckRecord& add_le(const std::string& name, const std::string& anchor, double measured,
                        double bound, const std::string& note = "");
    // measured >= floor.
    CheckRecord& add_ge(const std::string& name, const std::string& anchor, double measured,
                        double floor, const std::string& note = "");
    CheckRecord& add_flag(const std::string& name, const std::string& anchor, bool ok,
                          double measured = 0.0, const std::string& note = "");
};

// CSV schema v1:
//   # schema=bmolab.report.v1
//   experiment,check,anchor,measured,predicted,tolerance,pass,note
void write_csv(const VerdictReport& rep, std::ostream& os);
void write_json(const VerdictReport& rep, std::ostream& os);

// Plot-ready long format: # schema=bmolab.long.v1 / x,series,y
struct LongRow {
    double x = 0.0;
    std::string series;
    double y = 0.0;
};
void write_long_csv(const std::vector<LongRow>& rows, std::ostream& os);

// Locale-independent double formatting used by every writer.
std::string fmt_g(double v, int precision = 12);

}  // namespace bmo
