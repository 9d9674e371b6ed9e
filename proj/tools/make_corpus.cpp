// Generates the deterministic pseudo-English corpus used by the toy
// experiments, so runs need no external data.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dfalab/errors.hpp"
#include "dfalab/synthtext.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic synthetic text generator"};
  std::string out = "corpus.txt";
  std::uint64_t seed = 7;
  std::size_t bytes = 2'200'000;
  app.add_option("--out", out, "Output text file");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--bytes", bytes, "Exact output size in bytes");

  try {
    app.parse(argc, argv);
    const std::string text = dfalab::synth_text(seed, bytes);
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file) throw dfalab::IoError("cannot open '" + out + "' for writing");
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw dfalab::IoError("write failure on '" + out + "'");
    std::cout << "wrote " << text.size() << " bytes to " << out << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const dfalab::Error& e) {
    const nlohmann::json err = {{"error", e.tag()}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
}
