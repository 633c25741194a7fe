#pragma once

#include "ccsim/experiments.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace ccsim {

/// One metric of one run: `name,param,value,metric,result,unit`.
struct ResultRow {
  std::string name;
  std::string param;
  std::string value;
  std::string metric;
  std::string result;
  std::string unit;
};

/// Shortest decimal that round-trips to `v`.
std::string format_number(double v);

std::vector<ResultRow> to_rows(const ReproductionReport& report);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);

/// Space-aligned columns with a header rule.
void write_table(std::ostream& os, const std::vector<ResultRow>& rows);

}  // namespace ccsim
