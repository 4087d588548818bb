#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "n2n/commands.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "output directory");
}

n2n::RunConfig resolve(const CommonArgs& args) {
    auto cfg = args.config_path.empty() ? n2n::RunConfig()
                                        : n2n::RunConfig::from_file(args.config_path);
    if (args.seed) cfg.set("seed", std::to_string(*args.seed));
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"speech denoising toolkit"};
    app.require_subcommand(1);

    CommonArgs gen_args;
    auto* gen = app.add_subcommand("gen-corpus", "synthesize a paired speech/noise dataset");
    add_common(gen, gen_args);

    CommonArgs train_args;
    std::string train_mode = "n2n";
    std::string train_manifest;
    std::string train_init;
    auto* train = app.add_subcommand("train", "train a denoising model on a dataset");
    add_common(train, train_args);
    train->add_option("--mode", train_mode, "ssd, n2n, or hsd");
    train->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train->add_option("--init", train_init, "starting model file");

    CommonArgs den_args;
    std::string den_model, den_wav;
    auto* den = app.add_subcommand("denoise", "run a trained model over a wav file");
    add_common(den, den_args);
    den->add_option("--model", den_model, "trained model file")->required();
    den->add_option("--input", den_wav, "wav file to denoise")->required();

    CommonArgs eval_args;
    std::string eval_manifest, eval_ssd, eval_hsd;
    bool eval_wiener = false;
    auto* eval = app.add_subcommand("eval", "score systems on the test split");
    add_common(eval, eval_args);
    eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval->add_option("--ssd", eval_ssd, "supervised model to score");
    eval->add_option("--hsd", eval_hsd, "adapted model to score");
    eval->add_flag("--wiener", eval_wiener, "include the Wiener baseline");

    CommonArgs field_args;
    std::string field_stream, field_model;
    auto* field = app.add_subcommand("field-sim", "run the deployment loop over a stereo stream");
    add_common(field, field_args);
    field->add_option("--stream", field_stream, "stereo wav or manifest (.jsonl)")->required();
    field->add_option("--model", field_model, "pretrained model file")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) {
            n2n::cmd_gen_corpus(resolve(gen_args), gen_args.out_dir);
        } else if (train->parsed()) {
            std::optional<std::filesystem::path> init;
            if (!train_init.empty()) init = train_init;
            n2n::cmd_train(resolve(train_args), train_mode, train_manifest, init,
                           train_args.out_dir);
        } else if (den->parsed()) {
            n2n::cmd_denoise(resolve(den_args), den_model, den_wav, den_args.out_dir);
        } else if (eval->parsed()) {
            n2n::EvalSelection sel;
            if (!eval_ssd.empty()) sel.ssd_model = eval_ssd;
            if (!eval_hsd.empty()) sel.hsd_model = eval_hsd;
            sel.wiener = eval_wiener;
            n2n::cmd_eval(resolve(eval_args), eval_manifest, sel, eval_args.out_dir);
        } else if (field->parsed()) {
            n2n::cmd_field_sim(resolve(field_args), field_stream, field_model,
                               field_args.out_dir);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const n2n::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
