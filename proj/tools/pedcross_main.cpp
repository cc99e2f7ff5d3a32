#include "pedcross/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian crossing-intention prediction over traffic scene graphs"};
  app.require_subcommand(1);

  pedcross::cli::GenDataOpts gen;
  double gen_noise = -1.0;
  std::string gen_config;
  auto* cmd_gen = app.add_subcommand("gen-data", "Generate a synthetic scene dataset");
  cmd_gen->add_option("--out", gen.out_dir, "Output dataset directory")->required();
  cmd_gen->add_option("--num", gen.num, "Number of scenes")->required();
  cmd_gen->add_option("--seed", gen.seed, "Dataset seed");
  cmd_gen->add_option("--noise", gen_noise, "Label flip probability in [0, 0.5)");
  cmd_gen->add_option("--config", gen_config, "World config JSON file");

  pedcross::cli::TrainOpts tr;
  double tr_lr = -1.0;
  auto* cmd_train = app.add_subcommand("train", "Train a model on a dataset");
  cmd_train->add_option("--data", tr.data_dir, "Dataset directory")->required();
  cmd_train->add_option("--out", tr.out_checkpoint, "Checkpoint output path")->required();
  cmd_train->add_option("--epochs", tr.epochs, "Training epochs");
  cmd_train->add_option("--lr", tr_lr, "Learning rate (default: node-count rule)");
  cmd_train->add_option("--batch-size", tr.batch_size, "Mini-batch size");
  cmd_train->add_option("--seed", tr.seed, "Training seed");
  cmd_train->add_flag("--ablate-signals", tr.ablate_signals,
                      "Zero the signal-state block of every class feature");

  pedcross::cli::EvalOpts ev;
  std::string ev_report;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  cmd_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  cmd_eval->add_option("--data", ev.data_dir, "Dataset directory")->required();
  cmd_eval->add_option("--split", ev.split, "train|val|test (default test)");
  cmd_eval->add_option("--report", ev_report, "CSV report output path");

  pedcross::cli::PredictOpts pr;
  auto* cmd_predict = app.add_subcommand("predict", "Predict one scene file");
  cmd_predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  cmd_predict->add_option("--scene", pr.scene, "Scene JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) {
      if (gen_noise >= 0.0) gen.noise = gen_noise;
      if (!gen_config.empty()) gen.config = gen_config;
      pedcross::cli::gen_data(gen, std::cout);
    } else if (cmd_train->parsed()) {
      if (tr_lr > 0.0) tr.lr = tr_lr;
      pedcross::cli::train_command(tr, std::cout);
    } else if (cmd_eval->parsed()) {
      if (!ev_report.empty()) ev.report = ev_report;
      pedcross::cli::eval_command(ev, std::cout);
    } else if (cmd_predict->parsed()) {
      pedcross::cli::predict_command(pr, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
