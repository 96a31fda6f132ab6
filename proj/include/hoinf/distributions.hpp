#pragma once

namespace hoinf {

double normal_cdf(double x);
double normal_quantile(double p);
double student_cdf(double t, double df);
double student_quantile(double p, double df);

}  // namespace hoinf
