#pragma once

namespace mmtrack::chi2 {

double cdf(double x, double dof);
double quantile(double p, double dof);
double log_pdf(double x, double dof);

}  // namespace mmtrack::chi2
