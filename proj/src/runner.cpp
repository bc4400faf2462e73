// placeholder, replaced by the runner implementation
