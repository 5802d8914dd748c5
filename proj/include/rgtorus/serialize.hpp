#pragma once

#include "json.hpp"

#include "rgtorus/fourier_map.hpp"

namespace rgt {

using json = nlohmann::json;

// One entry per (site, k) block with a nonzero coefficient, full window, in
// deterministic (site-lex, k-ascending) order.
inline json map_to_json(const FourierMap& z) {
  const Truncation& tr = z.trunc();
  json j;
  j["d"] = tr.d;
  j["Q"] = tr.Q;
  j["Kmax"] = tr.kmax;
  j["mults"] = tr.mult;
  json entries = json::array();
  for (int site = 0; site < tr.nsites; ++site) {
    VectorXcd v = z.coeff(site);
    for (int k = 0; k <= tr.kmax; ++k) {
      int dk = tr.mult[k];
      if (dk == 0) continue;
      VectorXcd blk = v.segment(tr.offset[k], dk);
      if (blk.norm() == 0.0) continue;
      json e;
      e["q"] = tr.site_vector(site);
      e["k"] = k;
      std::vector<double> re(dk), im(dk);
      for (int i = 0; i < dk; ++i) {
        re[i] = blk[i].real();
        im[i] = blk[i].imag();
      }
      e["re"] = re;
      e["im"] = im;
      entries.push_back(e);
    }
  }
  j["entries"] = entries;
  return j;
}

// Loads into a caller-owned Truncation (the map keeps a pointer to it).
inline Truncation truncation_from_json(const json& j) {
  Truncation tr;
  tr.d = j.at("d").get<int>();
  tr.Q = j.at("Q").get<int>();
  tr.kmax = j.at("Kmax").get<int>();
  tr.mult = j.at("mults").get<std::vector<int>>();
  tr.finalize();
  return tr;
}

inline FourierMap map_from_json(const json& j, const Truncation& tr, bool real = true) {
  FourierMap z(tr, real);
  for (const json& e : j.at("entries")) {
    std::vector<int> q = e.at("q").get<std::vector<int>>();
    int site = tr.site_index(q);
    if (site < 0) throw std::invalid_argument("map_from_json: site outside window");
    int k = e.at("k").get<int>();
    std::vector<double> re = e.at("re").get<std::vector<double>>();
    std::vector<double> im = e.at("im").get<std::vector<double>>();
    if ((int)re.size() != tr.mult[k] || (int)im.size() != tr.mult[k])
      throw std::invalid_argument("map_from_json: block size mismatch");
    VectorXcd v = z.coeff(site);
    for (int i = 0; i < tr.mult[k]; ++i) v[tr.offset[k] + i] = cplx{re[i], im[i]};
    z.set_coeff(site, v);
  }
  return z;
}

}  // namespace rgt
