// Copyright 2026 The amdtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// 256-bit MPFR evaluations of the contrastive losses, written directly from
// their definitions as an independent high-precision oracle.

#pragma once

#ifdef AMD_HAVE_MPFR

#include <mpfr.h>

#include <vector>

namespace oracle {

constexpr mpfr_prec_t kPrec = 256;

// -log( exp(s+/tau) / (exp(s+/tau) + sum_i exp(s_i/tau)) )
inline double mpfr_info_nce(double sim_pos, const std::vector<double>& sim_negs,
                            double tau) {
  mpfr_t acc, term, sp;
  mpfr_inits2(kPrec, acc, term, sp, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_d(sp, sim_pos, MPFR_RNDN);
  mpfr_div_d(sp, sp, tau, MPFR_RNDN);
  mpfr_exp(acc, sp, MPFR_RNDN);
  for (double s : sim_negs) {
    mpfr_set_d(term, s, MPFR_RNDN);
    mpfr_div_d(term, term, tau, MPFR_RNDN);
    mpfr_exp(term, term, MPFR_RNDN);
    mpfr_add(acc, acc, term, MPFR_RNDN);
  }
  mpfr_log(acc, acc, MPFR_RNDN);
  mpfr_sub(acc, acc, sp, MPFR_RNDN);
  const double out = mpfr_get_d(acc, MPFR_RNDN);
  mpfr_clears(acc, term, sp, static_cast<mpfr_ptr>(nullptr));
  return out;
}

// L_dcl = -1/(|P|+1) sum_{t in {pos} u P} [ w_t * s_t / tau - log D ],
// D = exp(s_pos/tau) + sum_{u in U} exp(s_u/tau),
// w_pos = alpha (|P|+1), w_mem = (1-alpha)(|P|+1)/|P|.
inline double mpfr_dcl(double s_pos, const std::vector<double>& s_p,
                       const std::vector<double>& s_u, double alpha,
                       double tau) {
  mpfr_t denom, term, log_d, total;
  mpfr_inits2(kPrec, denom, term, log_d, total, static_cast<mpfr_ptr>(nullptr));

  mpfr_set_d(term, s_pos, MPFR_RNDN);
  mpfr_div_d(term, term, tau, MPFR_RNDN);
  mpfr_exp(denom, term, MPFR_RNDN);
  for (double s : s_u) {
    mpfr_set_d(term, s, MPFR_RNDN);
    mpfr_div_d(term, term, tau, MPFR_RNDN);
    mpfr_exp(term, term, MPFR_RNDN);
    mpfr_add(denom, denom, term, MPFR_RNDN);
  }
  mpfr_log(log_d, denom, MPFR_RNDN);

  const int p = static_cast<int>(s_p.size());
  const double w_pos = alpha * (p + 1);
  mpfr_set_d(total, s_pos, MPFR_RNDN);
  mpfr_div_d(total, total, tau, MPFR_RNDN);
  mpfr_mul_d(total, total, w_pos, MPFR_RNDN);
  mpfr_sub(total, total, log_d, MPFR_RNDN);
  if (p > 0) {
    const double w_mem = (1.0 - alpha) * (p + 1) / p;
    for (double s : s_p) {
      mpfr_set_d(term, s, MPFR_RNDN);
      mpfr_div_d(term, term, tau, MPFR_RNDN);
      mpfr_mul_d(term, term, w_mem, MPFR_RNDN);
      mpfr_sub(term, term, log_d, MPFR_RNDN);
      mpfr_add(total, total, term, MPFR_RNDN);
    }
  }
  mpfr_div_d(total, total, -(p + 1.0), MPFR_RNDN);
  const double out = mpfr_get_d(total, MPFR_RNDN);
  mpfr_clears(denom, term, log_d, total, static_cast<mpfr_ptr>(nullptr));
  return out;
}

}  // namespace oracle

#endif  // AMD_HAVE_MPFR
