"""attri2vec - Test Package"""
