// promptseg-oracle: reference segmenter that answers from ground-truth masks.
// Speaks the framed stdio protocol by default, or HTTP with --http PORT.

#include <unistd.h>

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptseg/error.hpp"
#include "promptseg/pipeline.hpp"

#include <httplib.h>

namespace {

using namespace promptseg;

int serve_stdio(const Oracle& oracle) {
  std::string payload;
  while (read_frame(STDIN_FILENO, payload)) {
    json request = json::parse(payload, nullptr, false);
    const json reply = request.is_discarded() ? json{{"error", "request is not valid JSON"}} : oracle.serve(request);
    write_frame(STDOUT_FILENO, reply.dump());
  }
  return 0;
}

int serve_http(const Oracle& oracle, const std::string& host, int port) {
  httplib::Server server;
  for (const std::string op : {"handshake", "segment", "segment_sequence"}) {
    server.Post("/" + op, [&oracle, op](const httplib::Request& req, httplib::Response& res) {
      json request = json::parse(req.body, nullptr, false);
      json reply;
      if (request.is_discarded() || !request.is_object()) {
        reply = {{"error", "request is not a JSON object"}};
        res.status = 400;
      } else {
        if (!request.contains("op")) request["op"] = op;
        reply = oracle.serve(request);
      }
      res.set_content(reply.dump(), "application/json");
    });
  }
  std::cerr << "promptseg-oracle listening on " << host << ":" << port << "\n";
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-truth oracle segmenter."};
  std::string kind = "gt";
  std::vector<std::string> datasets;
  std::string dataset_kind = "image";
  std::string split = "test";
  int connectivity = 8;
  int port = 0;
  std::string host = "127.0.0.1";
  app.add_option("--kind", kind, "gt, echo, noisy, everything, empty or identity")->capture_default_str();
  app.add_option("--dataset", datasets, "Dataset root providing ground truth (repeatable)")->required();
  app.add_option("--dataset-kind", dataset_kind, "image, video or volume")->capture_default_str();
  app.add_option("--split", split, "test or train")->capture_default_str();
  app.add_option("--connectivity", connectivity, "4 or 8")->capture_default_str();
  app.add_option("--http", port, "Serve HTTP on this port instead of stdio");
  app.add_option("--host", host, "HTTP bind address")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<DatasetManifest> manifests;
    for (const auto& d : datasets)
      manifests.push_back(scan_dataset(std::filesystem::weakly_canonical(d), parse_dataset_kind(dataset_kind),
                                       split == "train" ? Split::train : Split::test));
    const Oracle oracle(parse_oracle_kind(kind), ground_truth_index(manifests), connectivity);
    return port > 0 ? serve_http(oracle, host, port) : serve_stdio(oracle);
  } catch (const std::exception& e) {
    std::cerr << "promptseg-oracle: " << e.what() << "\n";
    return 1;
  }
}
