#pragma once

#include "context.hpp"

namespace egoexo::cli {

void cmd_toygen(Context& ctx);
void cmd_flow_compute(Context& ctx);
void cmd_synth_train(Context& ctx);
void cmd_synth_generate(Context& ctx);
void cmd_retr_train(Context& ctx);
void cmd_retr_gallery(Context& ctx);
void cmd_retr_query(Context& ctx);
void cmd_eval_synth(Context& ctx);
void cmd_eval_retr(Context& ctx);
void cmd_probe_invariance(Context& ctx);
void cmd_probe_synth_retrieval(Context& ctx);
void cmd_plot(Context& ctx);

}  // namespace egoexo::cli
