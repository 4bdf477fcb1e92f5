from rydwalk.experiments import Experiment, edge_config_2d, period_map

experiment = Experiment()
experiment.setup().build(edge_config_2d("coinless_dimer_anomalous"))
landing = period_map(experiment.table, experiment.compiled)
# only the boundary moves
print(landing[~landing["returned"]])
