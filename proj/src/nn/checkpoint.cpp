// SPDX-License-Identifier: Apache-2.0
#include "nn/checkpoint.hpp"

namespace rtopf::nn {

json mlp_to_json(const Mlp& net) {
  return json{{"sizes", net.sizes},
              {"out_act", net.out_act == OutputAct::sigmoid ? "sigmoid" : "identity"},
              {"theta", net.theta}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  net.sizes = j.at("sizes").get<std::vector<int>>();
  net.out_act = j.at("out_act").get<std::string>() == "sigmoid" ? OutputAct::sigmoid
                                                                : OutputAct::identity;
  net.theta = j.at("theta").get<std::vector<double>>();
  return net;
}

json adam_to_json(const AdamState& st) {
  return json{{"m", st.m},     {"v", st.v},         {"step", st.step},
              {"lr", st.lr},   {"beta1", st.beta1}, {"beta2", st.beta2},
              {"eps", st.eps}};
}

AdamState adam_from_json(const json& j) {
  AdamState st;
  st.m = j.at("m").get<std::vector<double>>();
  st.v = j.at("v").get<std::vector<double>>();
  st.step = j.at("step").get<long>();
  st.lr = j.at("lr").get<double>();
  st.beta1 = j.at("beta1").get<double>();
  st.beta2 = j.at("beta2").get<double>();
  st.eps = j.at("eps").get<double>();
  return st;
}

json policy_to_json(const GaussianPolicy& pol) {
  return json{{"mean_net", mlp_to_json(pol.mean_net)}, {"log_std", pol.log_std}};
}

GaussianPolicy policy_from_json(const json& j) {
  GaussianPolicy pol;
  pol.mean_net = mlp_from_json(j.at("mean_net"));
  pol.log_std = j.at("log_std").get<std::vector<double>>();
  return pol;
}

}  // namespace rtopf::nn
