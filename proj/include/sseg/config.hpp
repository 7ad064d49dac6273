#pragma once

#include <map>
#include <string>

#include "sseg/crf.hpp"
#include "sseg/instance.hpp"
#include "sseg/network.hpp"
#include "sseg/projection.hpp"
#include "sseg/simulator.hpp"

namespace sseg {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value configuration with '#' comments. Every key is validated
// against a registry of known keys with type and range; unknown keys are
// rejected.
class Config {
  public:
    Config();  // defaults only
    void load(const std::string& path);
    void set(const std::string& key, const std::string& value);

    long long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::string get_string(const std::string& key) const;

    GridConfig grid() const;
    Profile profile() const;
    CrfParams crf() const;
    ClusterConfig cluster() const;
    LidarConfig lidar() const;
    SceneGenConfig scene_gen() const;

    double train_lr() const { return get_double("train.lr"); }
    long long train_epochs() const { return get_int("train.epochs"); }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace sseg
