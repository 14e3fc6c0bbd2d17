# Experiment front end
