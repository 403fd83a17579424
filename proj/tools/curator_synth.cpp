// Writes a synthetic fixture workspace: labeled corpus, anchors, crawl
// fixtures and a matching config.json.
#include "curator/common/errors.hpp"
#include "curator/synth/shapes.hpp"

#include <iostream>

#include "CLI11.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic curator workspace"};
  app.name("curator-synth");
  std::string out;
  curator::synth::WorkspaceSpec spec;
  app.add_option("--out", out, "Workspace directory")->required();
  app.add_option("--classes", spec.classes, "Number of shape classes (1-4)")->check(CLI::Range(1, 4));
  app.add_option("--images", spec.labeled_images, "Labeled images");
  app.add_option("--crawl-images", spec.crawl_images, "Images served to the fixture crawler");
  app.add_flag("--cluttered", spec.cluttered, "Textured backgrounds");
  app.add_option("--second-object", spec.second_object_fraction, "Fraction of images with a second object")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--noise", spec.noise_rate, "Oracle detector label-noise rate")->check(CLI::Range(0.0, 1.0));
  app.add_option("--epochs", spec.epochs)->check(CLI::PositiveNumber);
  app.add_option("--lr", spec.learning_rate)->check(CLI::PositiveNumber);
  app.add_option("--seed", spec.seed);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    const auto config = curator::synth::write_workspace(out, spec);
    std::cout << config.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
