#pragma once

#include <string>

#include "zsmftg/optimize.hpp"

namespace zsmftg {

// Columns: iter,K1_<r>_<c>...,L1...,K2...,L2...,cost,rel_error,grad_norm,
// in_Theta with row-major gain flattening; 17 significant digits, so the
// round trip through read_csv is lossless.
void emit_csv(const IterateLog& log, const std::string& path);
IterateLog read_csv(const std::string& path);

// Static SVG: gain entries vs iteration, and log-scale relative error vs
// iteration. Refuses an empty log.
void emit_plot(const IterateLog& log, const std::string& path);

// Pointwise mean of equally-shaped logs (gains, cost, rel_error, grad_norm
// averaged; in_Theta and-ed).
IterateLog average_logs(const std::vector<IterateLog>& logs);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace zsmftg
