#include "ccsim/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace ccsim {

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<ResultRow> to_rows(const ReproductionReport& report) {
  std::vector<ResultRow> rows;
  for (const auto& r : report.rows) {
    const std::string param = "R1:R2";
    const std::string value = format_number(r.r1) + ":" + format_number(r.r2);
    auto add = [&](std::string metric, std::string result, std::string unit) {
      rows.push_back({r.name, param, value, std::move(metric), std::move(result), std::move(unit)});
    };
    add("level", std::to_string(static_cast<int>(r.level)), "");
    add("rx", format_number(r.rx), "ohm");
    add("vpp_in", format_number(r.vpp_in), "V");
    add("vpp_out", format_number(r.measured_vpp_out), "V");
    add("vpp_out_predicted", format_number(r.predicted_vpp_out), "V");
    if (r.published_vpp_out) add("vpp_out_published", format_number(*r.published_vpp_out), "V");
    if (r.deviation) add("deviation", format_number(*r.deviation), "");
    if (r.ideal_gain) add("gain_ideal", format_number(*r.ideal_gain), "");
    if (r.tuning) {
      add("tuning_case", std::string(to_string(r.tuning->label)), "");
      add("gain_predicted", format_number(r.tuning->predicted_gain), "");
      add("behavior", std::string(to_string(r.tuning->behavior)), "");
    }
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "name,param,value,metric,result,unit\n";
  for (const auto& r : rows) {
    os << r.name << ',' << r.param << ',' << r.value << ',' << r.metric << ',' << r.result << ','
       << r.unit << '\n';
  }
}

void write_table(std::ostream& os, const std::vector<ResultRow>& rows) {
  const std::array<std::string, 6> header{"name", "param", "value", "metric", "result", "unit"};
  std::array<std::size_t, 6> width{};
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  const auto fields = [](const ResultRow& r) {
    return std::array<const std::string*, 6>{&r.name,   &r.param,  &r.value,
                                             &r.metric, &r.result, &r.unit};
  };
  for (const auto& r : rows) {
    const auto f = fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) width[i] = std::max(width[i], f[i]->size());
  }
  const auto line = [&](const std::array<const std::string*, 6>& f) {
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
      out += *f[i];
      if (i + 1 < f.size()) out += std::string(width[i] - f[i]->size() + 2, ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    os << out << '\n';
  };
  line({&header[0], &header[1], &header[2], &header[3], &header[4], &header[5]});
  std::size_t total = 0;
  for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i + 1 < width.size() ? 2 : 0);
  os << std::string(total, '-') << '\n';
  for (const auto& r : rows) line(fields(r));
}

}  // namespace ccsim
