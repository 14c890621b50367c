#include "bmo/report.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace bmo {

bool VerdictReport::overall() const {
    for (const auto& r : records)
        if (!r.pass) return false;
    return true;
}

CheckRecord& VerdictReport::add_close(const std::string& name, const std::string& anchor,
                                      double measured, double predicted, double tolerance,
                                      const std::string& note) {
    CheckRecord r{name, anchor, measured, predicted, tolerance,
                  std::abs(measured - predicted) <= tolerance, note};
    records.push_back(std::move(r));
    return records.back();
}

CheckRecord& VerdictReport::add_le(const std::string& name, const std::string& anchor,
                                   double measured, double bound, const std::string& note) {
    CheckRecord r{name, anchor, measured, bound, 0.0, measured <= bound, note};
    records.push_back(std::move(r));
    return records.back();
}

CheckRecord& VerdictReport::add_ge(const std::string& name, const std::string& anchor,
                                   double measured, double floor, const std::string& note) {
    CheckRecord r{name, anchor, measured, floor, 0.0, measured >= floor, note};
    records.push_back(std::move(r));
    return records.back();
}

CheckRecord& VerdictReport::add_flag(const std::string& name, const std::string& anchor, bool ok,
                                     double measured, const std::string& note) {
    CheckRecord r{name, anchor, measured, ok ? 1.0 : 0.0, 0.0, ok, note};
    records.push_back(std::move(r));
    return records.back();
}

std::string fmt_g(double v, int precision) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_csv(const VerdictReport& rep, std::ostream& os) {
    os << "# schema=bmolab.report.v1\n";
    os << "experiment,check,anchor,measured,predicted,tolerance,pass,note\n";
    for (const auto& r : rep.records) {
        os << csv_escape(rep.experiment) << ',' << csv_escape(r.name) << ','
           << csv_escape(r.anchor) << ',' << fmt_g(r.measured) << ',' << fmt_g(r.predicted)
           << ',' << fmt_g(r.tolerance) << ',' << (r.pass ? "1" : "0") << ','
           << csv_escape(r.note) << '\n';
    }
}

void write_json(const VerdictReport& rep, std::ostream& os) {
    nlohmann::ordered_json j;
    j["schema"] = "bmolab.report.v1";
    j["experiment"] = rep.experiment;
    j["seed"] = rep.seed;
    j["grid"] = {{"horizon", rep.horizon}, {"steps", rep.steps}};
    j["paths"] = rep.paths;
    j["overall_pass"] = rep.overall();
    auto& recs = j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.records) {
        recs.push_back({{"check", r.name},
                        {"anchor", r.anchor},
                        {"measured", r.measured},
                        {"predicted", r.predicted},
                        {"tolerance", r.tolerance},
                        {"pass", r.pass},
                        {"note", r.note}});
    }
    os << j.dump(2) << '\n';
}

void write_long_csv(const std::vector<LongRow>& rows, std::ostream& os) {
    os << "# schema=bmolab.long.v1\n";
    os << "x,series,y\n";
    for (const auto& r : rows)
        os << fmt_g(r.x) << ',' << csv_escape(r.series) << ',' << fmt_g(r.y) << '\n';
}

}  // namespace bmo
