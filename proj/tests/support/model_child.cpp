/*
 * Copyright 2026 The AcME Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Test child for the external model adapter. Reads one request per line on
// stdin and answers according to the mode given on the command line:
//
//   echo0                  first cell of each row
//   linear b c1 ... cp     b + sum c_j x_j, same order as the built-in model
//   classify               [1 - s(x0), s(x0)] with s the logistic function
//   malformed              a line that is not JSON
//   wrongcount             one prediction too few
//   badid                  echoes the wrong id
//   crash                  writes a diagnostic to stderr and exits
//   hang                   never answers

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: model_child <mode> [args]\n";
    return 64;
  }
  const std::string mode = argv[1];
  std::vector<double> params;
  for (int i = 2; i < argc; ++i) params.push_back(std::strtod(argv[i], nullptr));

  std::string line;
  while (std::getline(std::cin, line)) {
    const auto request = nlohmann::json::parse(line);
    const auto& rows = request.at("rows");
    nlohmann::json response;
    response["id"] = request.at("id");
    nlohmann::json predictions = nlohmann::json::array();
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    } else if (mode == "crash") {
      std::cerr << "model_child: simulated failure" << std::endl;
      return 3;
    } else if (mode == "malformed") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    for (const auto& row : rows) {
      if (mode == "echo0" || mode == "wrongcount" || mode == "badid") {
        predictions.push_back(row.at(0).get<double>());
      } else if (mode == "linear") {
        double sum = params.at(0);
        for (std::size_t j = 0; j < row.size(); ++j) {
          sum += params.at(j + 1) * row[j].get<double>();
        }
        predictions.push_back(sum);
      } else if (mode == "classify") {
        const double s = 1.0 / (1.0 + std::exp(-row.at(0).get<double>()));
        predictions.push_back({1.0 - s, s});
      }
    }
    if (mode == "wrongcount" && !predictions.empty()) predictions.erase(predictions.size() - 1);
    if (mode == "badid") response["id"] = request.at("id").get<long long>() + 1;
    response["predictions"] = predictions;
    std::cout << response.dump() << std::endl;
  }
  return 0;
}
